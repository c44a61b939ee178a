#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hops/evaluation.hpp"
#include "hops/projection.hpp"

namespace hops {

struct StrategyReport {
  std::string strategy;
  std::string query_condition;
  std::vector<std::string> reference_conditions;
  RecallCurve recall;
  ErrorHistogram histogram;
};

/// Everything one evaluation run produced plus the configuration that produced it.
struct EvalReport {
  std::string dataset_id;
  std::string query_condition;
  std::int64_t tolerance_frames = 0;
  std::vector<std::size_t> recall_ns;
  std::optional<ProjectionSpec> projection;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config_echo = nlohmann::ordered_json::object();
  std::string generated_at;  // ISO-8601 UTC; excluded from determinism checks

  std::vector<StrategyReport> strategies;
  std::vector<ProgressionPoint> progression;
  std::vector<SweepPoint> sweep;

  nlohmann::ordered_json to_json() const;
};

// Report files written by write_report:
//   report.json      full report (timing and timestamps under "run")
//   recall.csv       strategy,n,recall
//   histogram.csv    strategy,offset,count,density
//   errors.csv       strategy,query,error
//   progression.csv  k,recall_at_1             (when a progression was run)
//   sweep.csv        output_dim,n,recall       (when a sweep was run)
// CSV files contain no timing data, so identical runs give identical bytes.
void write_report(const EvalReport& report, const std::filesystem::path& directory);

std::string recall_csv(const EvalReport& report);
std::string histogram_csv(const EvalReport& report);
std::string errors_csv(const EvalReport& report);
std::string progression_csv(const std::vector<ProgressionPoint>& points);
std::string sweep_csv(const std::vector<SweepPoint>& points);

// Side-by-side recall table of two report.json documents, one line per
// (strategy, N) present in either.
std::string diff_reports(const nlohmann::json& a, const nlohmann::json& b);

std::string utc_timestamp();

// Writes `text` to a temporary sibling then renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hops
