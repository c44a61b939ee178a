#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hops/descriptor_store.hpp"
#include "hops/fusion.hpp"

namespace hops {

/// Query x reference cosine distances, row-major, each in [0, 2].
struct DistanceMatrix {
  std::size_t query_count = 0;
  std::size_t reference_count = 0;
  std::vector<double> values;
  std::string query_condition;
  std::string reference_label;

  double at(std::size_t q, std::size_t r) const { return values[q * reference_count + r]; }
  std::span<const double> row(std::size_t q) const {
    return std::span<const double>(values).subspan(q * reference_count, reference_count);
  }
};

/// Per query, reference indices by ascending distance, ties by ascending index.
struct Ranking {
  std::vector<std::vector<std::uint32_t>> lists;

  std::size_t query_count() const { return lists.size(); }
};

// 1 - cos(q, r) with double accumulation; a zero vector on either side gives 1.0.
double cosine_distance(std::span<const float> a, std::span<const float> b);

DistanceMatrix cosine_distance_matrix(const DescriptorSet& queries, const DescriptorSet& refs);
DistanceMatrix cosine_distance_matrix(const DescriptorSet& queries, const FusedReferenceSet& refs);

// Argmin per query row, smallest index on ties.
std::vector<std::uint32_t> best_match(const DistanceMatrix& distances);

// Full ranking when depth is 0, otherwise only the first `depth` entries per query.
Ranking rank(const DistanceMatrix& distances, std::size_t depth = 0);

struct PoolIndex {
  std::size_t place;
  std::size_t set;
};

/// Query distances against the concatenation of K aligned sets (manifest order).
/// Column p belongs to place p mod M of set p / M.
struct PooledMatch {
  DistanceMatrix distances;
  std::size_t places = 0;
  std::size_t sets = 0;

  PoolIndex locate(std::size_t pooled_index) const { return {pooled_index % places, pooled_index / places}; }
  // Collapses the pooled ranking into place space, keeping each place's first occurrence.
  Ranking place_ranking() const;
};

PoolIndex pooled_location(std::size_t pooled_index, std::size_t places);

PooledMatch pooled_match(const DescriptorSet& queries, std::span<const DescriptorSet> sets);

enum class AggregateMode { mean, min, max, median };

AggregateMode parse_aggregate_mode(const std::string& name);
std::string to_string(AggregateMode mode);

// Element-wise aggregation; median of an even count averages the two middle values.
DistanceMatrix aggregate_distances(std::span<const DistanceMatrix> per_set, AggregateMode mode);

struct Identification {
  std::size_t index = 0;
  std::string dataset_id;
  std::vector<double> similarities;
};

// Highest cosine similarity wins; ties go to the earliest signature.
Identification identify_dataset(std::span<const float> query, std::span<const DatasetSignature> signatures);

// Instrumented count of pairwise distance evaluations performed by this module.
std::uint64_t distance_evaluations();
void reset_distance_evaluations();

}  // namespace hops
