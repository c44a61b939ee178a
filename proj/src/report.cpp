#include "hops/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "hops/errors.hpp"

namespace hops {

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["dataset_id"] = dataset_id;
  j["query_condition"] = query_condition;
  j["tolerance_frames"] = tolerance_frames;
  j["recall_ns"] = recall_ns;
  j["seed"] = seed;
  if (projection) {
    j["projection"] = {{"input_dim", projection->input_dim},
                       {"output_dim", projection->output_dim},
                       {"seed", projection->seed},
                       {"allow_expansion", projection->allow_expansion}};
  } else {
    j["projection"] = nullptr;
  }
  j["config"] = config_echo;

  auto& results = j["results"] = nlohmann::ordered_json::array();
  for (const auto& s : strategies) {
    nlohmann::ordered_json r;
    r["strategy"] = s.strategy;
    r["query_condition"] = s.query_condition;
    r["reference_conditions"] = s.reference_conditions;
    r["k"] = s.reference_conditions.size();
    auto& rec = r["recall"] = nlohmann::ordered_json::object();
    for (const auto& [n, v] : s.recall) rec[std::to_string(n)] = v;
    r["errors"] = s.histogram.errors;
    auto& bins = r["histogram"] = nlohmann::ordered_json::array();
    for (const auto& b : s.histogram.bins) {
      bins.push_back({{"offset", b.offset}, {"count", b.count}, {"density", b.density}});
    }
    results.push_back(std::move(r));
  }
  if (!progression.empty()) {
    auto& p = j["progression"] = nlohmann::ordered_json::array();
    for (const auto& pt : progression) p.push_back({{"k", pt.k}, {"recall_at_1", pt.recall_at_1}});
  }
  nlohmann::ordered_json run;
  run["generated_at"] = generated_at;
  if (!sweep.empty()) {
    auto& sw = j["sweep"] = nlohmann::ordered_json::array();
    auto& timing = run["sweep_seconds"] = nlohmann::ordered_json::array();
    for (const auto& pt : sweep) {
      nlohmann::ordered_json rec = nlohmann::ordered_json::object();
      for (const auto& [n, v] : pt.recall) rec[std::to_string(n)] = v;
      sw.push_back({{"output_dim", pt.output_dim}, {"recall", rec}});
      timing.push_back({{"output_dim", pt.output_dim}, {"seconds", pt.seconds}});
    }
  }
  j["run"] = std::move(run);
  return j;
}

std::string recall_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "strategy,n,recall\n";
  for (const auto& s : report.strategies) {
    for (const auto& [n, v] : s.recall) out << s.strategy << ',' << n << ',' << fixed(v) << '\n';
  }
  return out.str();
}

std::string histogram_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "strategy,offset,count,density\n";
  for (const auto& s : report.strategies) {
    for (const auto& b : s.histogram.bins) {
      out << s.strategy << ',' << b.offset << ',' << b.count << ',' << fixed(b.density) << '\n';
    }
  }
  return out.str();
}

std::string errors_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "strategy,query,error\n";
  for (const auto& s : report.strategies) {
    for (std::size_t q = 0; q < s.histogram.errors.size(); ++q) {
      out << s.strategy << ',' << q << ',' << s.histogram.errors[q] << '\n';
    }
  }
  return out.str();
}

std::string progression_csv(const std::vector<ProgressionPoint>& points) {
  std::ostringstream out;
  out << "k,recall_at_1\n";
  for (const auto& p : points) out << p.k << ',' << fixed(p.recall_at_1) << '\n';
  return out.str();
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "output_dim,n,recall\n";
  for (const auto& p : points) {
    for (const auto& [n, v] : p.recall) out << p.output_dim << ',' << n << ',' << fixed(v) << '\n';
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing", tmp.string());
    out << text;
    if (!out) throw IoError("write failed", tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into place", path.string());
}

void write_report(const EvalReport& report, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create output directory", directory.string());
  write_text_file(directory / "report.json", report.to_json().dump(2) + "\n");
  write_text_file(directory / "recall.csv", recall_csv(report));
  write_text_file(directory / "histogram.csv", histogram_csv(report));
  write_text_file(directory / "errors.csv", errors_csv(report));
  if (!report.progression.empty()) write_text_file(directory / "progression.csv", progression_csv(report.progression));
  if (!report.sweep.empty()) write_text_file(directory / "sweep.csv", sweep_csv(report.sweep));
}

std::string diff_reports(const nlohmann::json& a, const nlohmann::json& b) {
  using Key = std::pair<std::string, std::size_t>;
  const auto collect = [](const nlohmann::json& j) {
    std::map<Key, double> values;
    if (!j.contains("results")) throw ConfigError("report has no results section");
    for (const auto& r : j.at("results")) {
      const auto name = r.at("strategy").get<std::string>();
      for (const auto& [n, v] : r.at("recall").items()) values[{name, std::stoul(n)}] = v.get<double>();
    }
    return values;
  };
  auto va = collect(a);
  auto vb = collect(b);
  // Two single-strategy reports with different strategies (e.g. single:<c> vs
  // hops) are compared row by row under a combined label.
  const auto only_strategy = [](const std::map<Key, double>& values) -> std::optional<std::string> {
    std::set<std::string> names;
    for (const auto& [k, v] : values) names.insert(k.first);
    if (names.size() == 1) return *names.begin();
    return std::nullopt;
  };
  const auto sa = only_strategy(va);
  const auto sb = only_strategy(vb);
  if (sa && sb && *sa != *sb) {
    const auto relabel = [&](std::map<Key, double>& values) {
      std::map<Key, double> out;
      for (const auto& [k, v] : values) out[{*sa + " vs " + *sb, k.second}] = v;
      values = std::move(out);
    };
    relabel(va);
    relabel(vb);
  }
  std::set<Key> keys;
  for (const auto& [k, v] : va) keys.insert(k);
  for (const auto& [k, v] : vb) keys.insert(k);

  std::ostringstream out;
  out << "strategy,n,a,b,delta\n";
  for (const auto& key : keys) {
    const auto ia = va.find(key);
    const auto ib = vb.find(key);
    out << key.first << ',' << key.second << ',';
    out << (ia != va.end() ? fixed(100.0 * ia->second, 1) : "-") << ',';
    out << (ib != vb.end() ? fixed(100.0 * ib->second, 1) : "-") << ',';
    if (ia != va.end() && ib != vb.end()) {
      out << fixed(100.0 * (ib->second - ia->second), 1);
    } else {
      out << '-';
    }
    out << '\n';
  }
  return out.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace hops
