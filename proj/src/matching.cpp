#include "hops/matching.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#include "hops/errors.hpp"

namespace hops {

namespace {

std::atomic<std::uint64_t> g_distance_evaluations{0};

// Four interleaved accumulators; the products are identical for (a, b) and
// (b, a), so the result is exactly symmetric.
double dot(const float* a, const float* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += static_cast<double>(a[i]) * b[i];
    s1 += static_cast<double>(a[i + 1]) * b[i + 1];
    s2 += static_cast<double>(a[i + 2]) * b[i + 2];
    s3 += static_cast<double>(a[i + 3]) * b[i + 3];
  }
  for (; i < n; ++i) s0 += static_cast<double>(a[i]) * b[i];
  return (s0 + s1) + (s2 + s3);
}

double distance_from(double dot_ab, double norm_a, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) return 1.0;
  const double d = 1.0 - dot_ab / (norm_a * norm_b);
  return std::clamp(d, 0.0, 2.0);
}

std::vector<double> row_norms(std::span<const float> data, std::size_t rows, std::size_t dim) {
  std::vector<double> norms(rows);
  for (std::size_t i = 0; i < rows; ++i) norms[i] = std::sqrt(dot(data.data() + i * dim, data.data() + i * dim, dim));
  return norms;
}

// Fills columns [column_offset, column_offset + ref_rows) of `out`.
void fill_block(std::span<const float> queries, std::size_t query_rows, std::span<const float> refs,
                std::size_t ref_rows, std::size_t dim, std::size_t column_offset, DistanceMatrix& out) {
  const auto qn = row_norms(queries, query_rows, dim);
  const auto rn = row_norms(refs, ref_rows, dim);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(query_rows); ++q) {
    const float* qa = queries.data() + q * dim;
    double* dst = out.values.data() + q * out.reference_count + column_offset;
    for (std::size_t r = 0; r < ref_rows; ++r) {
      dst[r] = distance_from(dot(qa, refs.data() + r * dim, dim), qn[q], rn[r]);
    }
  }
  g_distance_evaluations.fetch_add(static_cast<std::uint64_t>(query_rows) * ref_rows, std::memory_order_relaxed);
}

void check_dims(std::size_t query_dim, std::size_t ref_dim) {
  if (query_dim != ref_dim) {
    throw DimensionError("query dim " + std::to_string(query_dim) + " does not match reference dim " +
                         std::to_string(ref_dim));
  }
}

}  // namespace

double cosine_distance(std::span<const float> a, std::span<const float> b) {
  check_dims(a.size(), b.size());
  const double na = std::sqrt(dot(a.data(), a.data(), a.size()));
  const double nb = std::sqrt(dot(b.data(), b.data(), b.size()));
  return distance_from(dot(a.data(), b.data(), a.size()), na, nb);
}

DistanceMatrix cosine_distance_matrix(const DescriptorSet& queries, const DescriptorSet& refs) {
  check_dims(queries.dim(), refs.dim());
  DistanceMatrix out;
  out.query_count = queries.count();
  out.reference_count = refs.count();
  out.values.assign(out.query_count * out.reference_count, 0.0);
  out.query_condition = queries.condition_id();
  out.reference_label = refs.condition_id();
  fill_block(queries.data(), queries.count(), refs.data(), refs.count(), refs.dim(), 0, out);
  return out;
}

DistanceMatrix cosine_distance_matrix(const DescriptorSet& queries, const FusedReferenceSet& refs) {
  check_dims(queries.dim(), refs.dim);
  DistanceMatrix out;
  out.query_count = queries.count();
  out.reference_count = refs.count;
  out.values.assign(out.query_count * out.reference_count, 0.0);
  out.query_condition = queries.condition_id();
  out.reference_label = refs.condition_id();
  fill_block(queries.data(), queries.count(), refs.data, refs.count, refs.dim, 0, out);
  return out;
}

std::vector<std::uint32_t> best_match(const DistanceMatrix& distances) {
  std::vector<std::uint32_t> best(distances.query_count, 0);
  for (std::size_t q = 0; q < distances.query_count; ++q) {
    const auto row = distances.row(q);
    // min_element returns the first minimum, which is the tie-break rule.
    best[q] = static_cast<std::uint32_t>(std::min_element(row.begin(), row.end()) - row.begin());
  }
  return best;
}

Ranking rank(const DistanceMatrix& distances, std::size_t depth) {
  const std::size_t r_count = distances.reference_count;
  const std::size_t keep = depth == 0 ? r_count : std::min(depth, r_count);
  Ranking ranking;
  ranking.lists.resize(distances.query_count);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(distances.query_count); ++q) {
    const auto row = distances.row(q);
    std::vector<std::uint32_t> order(r_count);
    std::iota(order.begin(), order.end(), 0u);
    const auto before = [&row](std::uint32_t a, std::uint32_t b) {
      return row[a] < row[b] || (row[a] == row[b] && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), before);
    order.resize(keep);
    ranking.lists[q] = std::move(order);
  }
  return ranking;
}

PoolIndex pooled_location(std::size_t pooled_index, std::size_t places) {
  return {pooled_index % places, pooled_index / places};
}

Ranking PooledMatch::place_ranking() const {
  const Ranking pooled = rank(distances);
  Ranking places_only;
  places_only.lists.resize(pooled.lists.size());
  for (std::size_t q = 0; q < pooled.lists.size(); ++q) {
    std::vector<bool> seen(places, false);
    auto& out = places_only.lists[q];
    out.reserve(places);
    for (std::uint32_t p : pooled.lists[q]) {
      const std::size_t place = p % places;
      if (!seen[place]) {
        seen[place] = true;
        out.push_back(static_cast<std::uint32_t>(place));
      }
    }
  }
  return places_only;
}

PooledMatch pooled_match(const DescriptorSet& queries, std::span<const DescriptorSet> sets) {
  if (sets.empty()) throw EmptyInputError("pooled_match needs at least one reference set");
  require_aligned(sets);
  check_dims(queries.dim(), sets.front().dim());
  PooledMatch pooled;
  pooled.places = sets.front().count();
  pooled.sets = sets.size();
  auto& dm = pooled.distances;
  dm.query_count = queries.count();
  dm.reference_count = pooled.places * pooled.sets;
  dm.values.assign(dm.query_count * dm.reference_count, 0.0);
  dm.query_condition = queries.condition_id();
  dm.reference_label = "pooled:";
  for (std::size_t k = 0; k < sets.size(); ++k) {
    if (k) dm.reference_label += '+';
    dm.reference_label += sets[k].condition_id();
    fill_block(queries.data(), queries.count(), sets[k].data(), pooled.places, queries.dim(), k * pooled.places, dm);
  }
  return pooled;
}

AggregateMode parse_aggregate_mode(const std::string& name) {
  if (name == "mean") return AggregateMode::mean;
  if (name == "min") return AggregateMode::min;
  if (name == "max") return AggregateMode::max;
  if (name == "median") return AggregateMode::median;
  throw UsageError("unknown aggregation mode '" + name + "' (expected mean, min, max or median)");
}

std::string to_string(AggregateMode mode) {
  switch (mode) {
    case AggregateMode::mean: return "mean";
    case AggregateMode::min: return "min";
    case AggregateMode::max: return "max";
    case AggregateMode::median: return "median";
  }
  return "unknown";
}

DistanceMatrix aggregate_distances(std::span<const DistanceMatrix> per_set, AggregateMode mode) {
  if (per_set.empty()) throw EmptyInputError("aggregate_distances needs at least one matrix");
  const auto& first = per_set.front();
  for (const auto& m : per_set) {
    if (m.query_count != first.query_count || m.reference_count != first.reference_count) {
      throw ShapeError("distance matrix for '" + m.reference_label + "' is " + std::to_string(m.query_count) + "x" +
                       std::to_string(m.reference_count) + ", expected " + std::to_string(first.query_count) + "x" +
                       std::to_string(first.reference_count));
    }
  }
  DistanceMatrix out;
  out.query_count = first.query_count;
  out.reference_count = first.reference_count;
  out.query_condition = first.query_condition;
  out.reference_label = "dmat-" + to_string(mode) + ":";
  for (std::size_t k = 0; k < per_set.size(); ++k) {
    if (k) out.reference_label += '+';
    out.reference_label += per_set[k].reference_label;
  }
  out.values.resize(first.values.size());
  const std::size_t k_count = per_set.size();
  std::vector<double> column(k_count);
  for (std::size_t e = 0; e < out.values.size(); ++e) {
    for (std::size_t k = 0; k < k_count; ++k) column[k] = per_set[k].values[e];
    switch (mode) {
      case AggregateMode::mean: {
        double sum = 0.0;
        for (double v : column) sum += v;
        out.values[e] = sum / static_cast<double>(k_count);
        break;
      }
      case AggregateMode::min:
        out.values[e] = *std::min_element(column.begin(), column.end());
        break;
      case AggregateMode::max:
        out.values[e] = *std::max_element(column.begin(), column.end());
        break;
      case AggregateMode::median: {
        std::sort(column.begin(), column.end());
        const std::size_t mid = k_count / 2;
        out.values[e] = k_count % 2 ? column[mid] : 0.5 * (column[mid - 1] + column[mid]);
        break;
      }
    }
  }
  return out;
}

Identification identify_dataset(std::span<const float> query, std::span<const DatasetSignature> signatures) {
  if (signatures.empty()) throw EmptyInputError("identify_dataset needs at least one signature");
  Identification result;
  result.similarities.reserve(signatures.size());
  const double qn = std::sqrt(dot(query.data(), query.data(), query.size()));
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < signatures.size(); ++s) {
    const auto& sig = signatures[s];
    check_dims(query.size(), sig.vector.size());
    double d = 0.0, sq = 0.0;
    for (std::size_t j = 0; j < query.size(); ++j) {
      d += static_cast<double>(query[j]) * sig.vector[j];
      sq += sig.vector[j] * sig.vector[j];
    }
    const double sim = (qn == 0.0 || sq == 0.0) ? 0.0 : d / (qn * std::sqrt(sq));
    result.similarities.push_back(sim);
    if (sim > best) {
      best = sim;
      result.index = s;
    }
  }
  g_distance_evaluations.fetch_add(signatures.size(), std::memory_order_relaxed);
  result.dataset_id = signatures[result.index].dataset_id;
  return result;
}

std::uint64_t distance_evaluations() { return g_distance_evaluations.load(); }
void reset_distance_evaluations() { g_distance_evaluations.store(0); }

}  // namespace hops
