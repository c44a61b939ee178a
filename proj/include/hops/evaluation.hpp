#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hops/descriptor_store.hpp"
#include "hops/fusion.hpp"
#include "hops/matching.hpp"
#include "hops/projection.hpp"

namespace hops {

// Query q's true reference index is q.
struct IndexAlignedTruth {};
// Query index -> true reference index; queries absent from the map are a config error.
using ExplicitTruth = std::map<std::size_t, std::int64_t>;

struct EvalConfig {
  std::int64_t tolerance_frames = 0;
  std::vector<std::size_t> recall_ns = {1, 5, 10};
  std::variant<IndexAlignedTruth, ExplicitTruth> ground_truth = IndexAlignedTruth{};

  void validate() const;
  std::int64_t truth(std::size_t query) const;
};

using RecallCurve = std::map<std::size_t, double>;

// A query hits at N iff one of its first N ranked references lies within
// tolerance_frames of its true index.
RecallCurve recall_at_n(const Ranking& ranking, const EvalConfig& config);

struct HistogramBin {
  std::int64_t offset = 0;
  std::size_t count = 0;
  double density = 0.0;
};

struct ErrorHistogram {
  std::vector<std::int64_t> errors;  // top-1 match minus truth, per query
  std::vector<HistogramBin> bins;    // unit width, symmetric around 0

  // Fraction of queries with |error| <= radius.
  double mass_within(std::int64_t radius) const;
};

ErrorHistogram error_histogram(const Ranking& ranking, const EvalConfig& config);

/// Retrieval strategy over the non-query sets of a dataset.
struct Strategy {
  enum class Kind { single, hops, pool, dmat };
  Kind kind = Kind::hops;
  std::string condition;                    // single
  AggregateMode mode = AggregateMode::mean;  // dmat

  std::string name() const;
};

// "single:<condition>", "hops", "pool", "dmat:<mean|min|max|median>"; anything else is a UsageError.
Strategy parse_strategy(const std::string& text);

// Ranking in place space for `queries` against `refs` under `strategy`.
// Leakage of the query condition into `refs` is a LeakageError.
Ranking run_strategy(const Strategy& strategy, const DescriptorSet& queries, std::span<const DescriptorSet> refs,
                     const std::optional<ProjectionSpec>& projection = std::nullopt);

void check_no_leakage(const DescriptorSet& queries, std::span<const DescriptorSet> refs);

struct ProgressionPoint {
  std::size_t k = 0;
  double recall_at_1 = 0.0;
};

// Entry K evaluates the bundle of the first K sets.
std::vector<ProgressionPoint> fusion_progression(const DescriptorSet& queries, std::span<const DescriptorSet> sets,
                                                 const EvalConfig& config);

struct SweepPoint {
  std::size_t output_dim = 0;
  RecallCurve recall;
  double seconds = 0.0;  // projection + matching wall time
};

// Each entry projects queries and refs with ProjectionSpec{n, o, seed}; o == n
// is evaluated unprojected as the control.
std::vector<SweepPoint> dimensionality_sweep(const DescriptorSet& queries, const DescriptorSet& refs,
                                             std::span<const std::size_t> dims, std::uint64_t seed,
                                             const EvalConfig& config, bool allow_expansion = false);

struct IdentificationResult {
  std::string dataset_id;
  std::string condition_id;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  std::vector<std::string> predictions;
};

// truth[i] is the dataset query_sets[i] came from.
std::vector<IdentificationResult> identification_eval(std::span<const DescriptorSet> query_sets,
                                                      std::span<const DatasetSignature> signatures,
                                                      std::span<const std::string> truth);

// Every set of every dataset is used as a query set in turn, against
// signatures built from all sets except that one.
std::vector<IdentificationResult> leave_one_out_identification(
    const std::vector<std::vector<DescriptorSet>>& datasets);

}  // namespace hops
