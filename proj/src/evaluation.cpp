#include "hops/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>

#include "hops/errors.hpp"

namespace hops {

void EvalConfig::validate() const {
  if (tolerance_frames < 0) throw ConfigError("tolerance_frames must be non-negative");
  if (recall_ns.empty()) throw ConfigError("recall_ns must not be empty");
  for (std::size_t i = 0; i < recall_ns.size(); ++i) {
    if (recall_ns[i] == 0) throw ConfigError("recall N values must be positive");
    if (i && recall_ns[i] <= recall_ns[i - 1]) throw ConfigError("recall N values must be strictly increasing");
  }
}

std::int64_t EvalConfig::truth(std::size_t query) const {
  if (std::holds_alternative<IndexAlignedTruth>(ground_truth)) return static_cast<std::int64_t>(query);
  const auto& map = std::get<ExplicitTruth>(ground_truth);
  const auto it = map.find(query);
  if (it == map.end()) throw ConfigError("no ground truth for query " + std::to_string(query));
  return it->second;
}

RecallCurve recall_at_n(const Ranking& ranking, const EvalConfig& config) {
  config.validate();
  const std::size_t q_count = ranking.query_count();
  if (q_count == 0) throw EmptyInputError("recall_at_n needs at least one query");
  // First rank (0-based) at which each query hits, or npos.
  std::vector<std::size_t> first_hit(q_count, std::string::npos);
  for (std::size_t q = 0; q < q_count; ++q) {
    const std::int64_t truth = config.truth(q);
    const auto& list = ranking.lists[q];
    for (std::size_t r = 0; r < list.size(); ++r) {
      if (std::abs(static_cast<std::int64_t>(list[r]) - truth) <= config.tolerance_frames) {
        first_hit[q] = r;
        break;
      }
    }
  }
  RecallCurve curve;
  for (std::size_t n : config.recall_ns) {
    std::size_t hits = 0;
    for (std::size_t h : first_hit) hits += (h != std::string::npos && h < n) ? 1 : 0;
    curve[n] = static_cast<double>(hits) / static_cast<double>(q_count);
  }
  return curve;
}

double ErrorHistogram::mass_within(std::int64_t radius) const {
  if (errors.empty()) return 0.0;
  std::size_t inside = 0;
  for (auto e : errors) inside += std::abs(e) <= radius ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(errors.size());
}

ErrorHistogram error_histogram(const Ranking& ranking, const EvalConfig& config) {
  ErrorHistogram hist;
  const std::size_t q_count = ranking.query_count();
  hist.errors.reserve(q_count);
  std::int64_t extent = 0;
  for (std::size_t q = 0; q < q_count; ++q) {
    const std::int64_t truth = config.truth(q);
    if (ranking.lists[q].empty()) throw ConfigError("empty ranking for query " + std::to_string(q));
    const std::int64_t err = static_cast<std::int64_t>(ranking.lists[q].front()) - truth;
    hist.errors.push_back(err);
    extent = std::max(extent, std::abs(err));
  }
  hist.bins.resize(static_cast<std::size_t>(2 * extent + 1));
  for (std::size_t b = 0; b < hist.bins.size(); ++b) hist.bins[b].offset = static_cast<std::int64_t>(b) - extent;
  for (auto e : hist.errors) ++hist.bins[static_cast<std::size_t>(e + extent)].count;
  for (auto& bin : hist.bins) bin.density = q_count ? static_cast<double>(bin.count) / static_cast<double>(q_count) : 0.0;
  return hist;
}

std::string Strategy::name() const {
  switch (kind) {
    case Kind::single: return "single:" + condition;
    case Kind::hops: return "hops";
    case Kind::pool: return "pool";
    case Kind::dmat: return "dmat:" + to_string(mode);
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& text) {
  Strategy s;
  if (text == "hops") {
    s.kind = Strategy::Kind::hops;
  } else if (text == "pool") {
    s.kind = Strategy::Kind::pool;
  } else if (text.starts_with("single:") && text.size() > 7) {
    s.kind = Strategy::Kind::single;
    s.condition = text.substr(7);
  } else if (text.starts_with("dmat:")) {
    s.kind = Strategy::Kind::dmat;
    s.mode = parse_aggregate_mode(text.substr(5));
  } else {
    throw UsageError("unknown strategy '" + text + "' (expected single:<condition>, hops, pool or dmat:<mode>)");
  }
  return s;
}

void check_no_leakage(const DescriptorSet& queries, std::span<const DescriptorSet> refs) {
  for (const auto& r : refs) {
    if (r.condition_id() == queries.condition_id()) {
      throw LeakageError("query condition '" + queries.condition_id() + "' is among the reference sets");
    }
  }
}

namespace {

std::vector<DescriptorSet> maybe_project(std::span<const DescriptorSet> sets, const std::optional<ProjectionMatrix>& g) {
  std::vector<DescriptorSet> out;
  out.reserve(sets.size());
  for (const auto& s : sets) out.push_back(g ? project(*g, s).set : s);
  return out;
}

}  // namespace

Ranking run_strategy(const Strategy& strategy, const DescriptorSet& queries, std::span<const DescriptorSet> refs,
                     const std::optional<ProjectionSpec>& projection) {
  if (refs.empty()) throw EmptyInputError("no reference sets to match against");
  check_no_leakage(queries, refs);
  std::optional<ProjectionMatrix> g;
  if (projection) {
    if (projection->input_dim != queries.dim()) {
      throw DimensionError("projection expects dim " + std::to_string(projection->input_dim) + ", queries have " +
                           std::to_string(queries.dim()));
    }
    g = materialize(*projection);
  }
  const DescriptorSet q = g ? project(*g, queries).set : queries;

  switch (strategy.kind) {
    case Strategy::Kind::single: {
      const auto it = std::find_if(refs.begin(), refs.end(),
                                   [&](const DescriptorSet& s) { return s.condition_id() == strategy.condition; });
      if (it == refs.end()) throw LookupError("no reference set with condition '" + strategy.condition + "'");
      const DescriptorSet r = g ? project(*g, *it).set : *it;
      return rank(cosine_distance_matrix(q, r));
    }
    case Strategy::Kind::hops: {
      // Fuse in the original space; projection is linear so it commutes with the sum.
      auto fused = bundle_aligned(refs);
      if (projection) fused = project(*projection, fused);
      return rank(cosine_distance_matrix(q, fused));
    }
    case Strategy::Kind::pool: {
      const auto sets = maybe_project(refs, g);
      return pooled_match(q, sets).place_ranking();
    }
    case Strategy::Kind::dmat: {
      const auto sets = maybe_project(refs, g);
      require_aligned(sets);
      std::vector<DistanceMatrix> per_set;
      per_set.reserve(sets.size());
      for (const auto& s : sets) per_set.push_back(cosine_distance_matrix(q, s));
      return rank(aggregate_distances(per_set, strategy.mode));
    }
  }
  throw UsageError("unhandled strategy");
}

std::vector<ProgressionPoint> fusion_progression(const DescriptorSet& queries, std::span<const DescriptorSet> sets,
                                                 const EvalConfig& config) {
  if (sets.empty()) throw EmptyInputError("fusion_progression needs at least one reference set");
  check_no_leakage(queries, sets);
  require_aligned(sets);
  EvalConfig top1 = config;
  top1.recall_ns = {1};
  std::vector<ProgressionPoint> points;
  FusedReferenceSet fused = bundle_aligned(sets.first(1));
  for (std::size_t k = 1; k <= sets.size(); ++k) {
    if (k > 1) fused = bundle_incremental(fused, sets[k - 1]);
    const auto ranking = rank(cosine_distance_matrix(queries, fused), 1);
    points.push_back({k, recall_at_n(ranking, top1).at(1)});
  }
  return points;
}

std::vector<SweepPoint> dimensionality_sweep(const DescriptorSet& queries, const DescriptorSet& refs,
                                             std::span<const std::size_t> dims, std::uint64_t seed,
                                             const EvalConfig& config, bool allow_expansion) {
  if (queries.dim() != refs.dim()) {
    throw DimensionError("query dim " + std::to_string(queries.dim()) + " does not match reference dim " +
                         std::to_string(refs.dim()));
  }
  const std::size_t n = refs.dim();
  for (std::size_t o : dims) {
    ProjectionSpec{n, o, seed, allow_expansion}.validate();
  }
  const std::size_t depth = config.recall_ns.empty() ? 0 : config.recall_ns.back();
  std::vector<SweepPoint> points;
  for (std::size_t o : dims) {
    SweepPoint point;
    point.output_dim = o;
    const auto start = std::chrono::steady_clock::now();
    Ranking ranking;
    if (o == n) {
      ranking = rank(cosine_distance_matrix(queries, refs), depth);
    } else {
      const auto g = materialize(ProjectionSpec{n, o, seed, allow_expansion});
      ranking = rank(cosine_distance_matrix(project(g, queries).set, project(g, refs).set), depth);
    }
    point.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    point.recall = recall_at_n(ranking, config);
    points.push_back(std::move(point));
  }
  return points;
}

std::vector<IdentificationResult> identification_eval(std::span<const DescriptorSet> query_sets,
                                                      std::span<const DatasetSignature> signatures,
                                                      std::span<const std::string> truth) {
  if (truth.size() != query_sets.size()) {
    throw ConfigError("identification truth has " + std::to_string(truth.size()) + " labels for " +
                      std::to_string(query_sets.size()) + " query sets");
  }
  if (signatures.empty()) throw EmptyInputError("identification needs at least one signature");
  for (const auto& qs : query_sets) {
    for (const auto& sig : signatures) {
      if (sig.dataset_id != qs.dataset_id()) continue;
      if (std::find(sig.source_conditions.begin(), sig.source_conditions.end(), qs.condition_id()) !=
          sig.source_conditions.end()) {
        throw LeakageError("query set '" + qs.condition_id() + "' is bundled into the signature of '" +
                           sig.dataset_id + "'");
      }
    }
  }
  std::vector<IdentificationResult> results;
  for (std::size_t s = 0; s < query_sets.size(); ++s) {
    const auto& qs = query_sets[s];
    IdentificationResult res;
    res.dataset_id = truth[s];
    res.condition_id = qs.condition_id();
    res.total = qs.count();
    res.predictions.reserve(qs.count());
    for (std::size_t i = 0; i < qs.count(); ++i) {
      auto id = identify_dataset(qs.row(i), signatures);
      res.correct += id.dataset_id == truth[s] ? 1 : 0;
      res.predictions.push_back(std::move(id.dataset_id));
    }
    res.accuracy = static_cast<double>(res.correct) / static_cast<double>(res.total);
    results.push_back(std::move(res));
  }
  return results;
}

std::vector<IdentificationResult> leave_one_out_identification(const std::vector<std::vector<DescriptorSet>>& datasets) {
  std::vector<DatasetSignature> full;
  full.reserve(datasets.size());
  for (const auto& sets : datasets) full.push_back(bundle_dataset(sets));

  std::vector<IdentificationResult> results;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (std::size_t held = 0; held < datasets[d].size(); ++held) {
      std::vector<DescriptorSet> rest;
      for (std::size_t s = 0; s < datasets[d].size(); ++s) {
        if (s != held) rest.push_back(datasets[d][s]);
      }
      if (rest.empty()) throw EmptyInputError("dataset '" + datasets[d][held].dataset_id() + "' has a single set");
      auto signatures = full;
      signatures[d] = bundle_dataset(rest);
      const std::string truth = datasets[d][held].dataset_id();
      auto res = identification_eval(std::span(&datasets[d][held], 1), signatures, std::span(&truth, 1));
      results.push_back(std::move(res.front()));
    }
  }
  return results;
}

}  // namespace hops
