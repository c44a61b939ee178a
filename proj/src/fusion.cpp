#include "hops/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "hops/errors.hpp"

namespace hops {

namespace {

// Adds the unit-normalized version of `row` into `acc`; zero rows contribute nothing.
void accumulate_normalized(std::span<const float> row, double* acc) {
  double sq = 0.0;
  for (float v : row) sq += static_cast<double>(v) * v;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  // Match l2_normalize exactly: round the normalized value to float first.
  for (std::size_t j = 0; j < row.size(); ++j) acc[j] += static_cast<double>(static_cast<float>(row[j] * inv));
}

void finalize(FusedReferenceSet& fused) {
  fused.data.resize(fused.running_sum.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(fused.count); ++i) {
    const double* sum = fused.running_sum.data() + i * fused.dim;
    float* out = fused.data.data() + i * fused.dim;
    double scale = 1.0;
    if (fused.normalized_output) {
      double sq = 0.0;
      for (std::size_t j = 0; j < fused.dim; ++j) sq += sum[j] * sum[j];
      scale = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
    }
    for (std::size_t j = 0; j < fused.dim; ++j) out[j] = static_cast<float>(sum[j] * scale);
  }
}

void add_set(FusedReferenceSet& fused, const DescriptorSet& set) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(fused.count); ++i) {
    accumulate_normalized(set.row(i), fused.running_sum.data() + i * fused.dim);
  }
}

}  // namespace

std::string FusedReferenceSet::condition_id() const {
  std::string id = "fused:";
  for (std::size_t k = 0; k < source_conditions.size(); ++k) {
    if (k) id += '+';
    id += source_conditions[k];
  }
  return id;
}

DescriptorSet FusedReferenceSet::as_descriptor_set() const {
  return DescriptorSet(dataset_id, condition_id(), count, dim, data, frame_ids);
}

DescriptorSet DatasetSignature::as_descriptor_set() const {
  std::vector<float> row(vector.begin(), vector.end());
  return DescriptorSet(dataset_id, kSignatureCondition, 1, dim, std::move(row), {dataset_id});
}

DatasetSignature DatasetSignature::from_descriptor_set(const DescriptorSet& set) {
  if (set.count() != 1) {
    throw ValidationError("signature file must hold exactly one row, got " + std::to_string(set.count()));
  }
  DatasetSignature sig;
  sig.dataset_id = set.frame_ids().front();
  sig.dim = set.dim();
  sig.vector.assign(set.data().begin(), set.data().end());
  return sig;
}

FusedReferenceSet bundle_aligned(std::span<const DescriptorSet> sets, FusionOptions options) {
  if (sets.empty()) throw EmptyInputError("bundle_aligned needs at least one set");
  require_aligned(sets);

  FusedReferenceSet fused;
  fused.dataset_id = sets.front().dataset_id();
  fused.count = sets.front().count();
  fused.dim = sets.front().dim();
  fused.frame_ids = sets.front().frame_ids();
  fused.normalized_output = options.normalize_output;
  fused.running_sum.assign(fused.count * fused.dim, 0.0);

  std::unordered_set<std::string> seen;
  for (const auto& s : sets) {
    if (!seen.insert(s.condition_id()).second) {
      throw DuplicateSourceError("condition '" + s.condition_id() + "' appears twice in the fusion");
    }
    fused.source_conditions.push_back(s.condition_id());
    add_set(fused, s);
  }
  finalize(fused);
  return fused;
}

FusedReferenceSet bundle_incremental(const FusedReferenceSet& current, const DescriptorSet& addition) {
  if (addition.dim() != current.dim) {
    throw DimensionError("set '" + addition.condition_id() + "' has dim " + std::to_string(addition.dim()) +
                         ", fusion has " + std::to_string(current.dim));
  }
  if (addition.count() != current.count) {
    throw AlignmentError("set '" + addition.condition_id() + "' has " + std::to_string(addition.count()) +
                         " rows, fusion has " + std::to_string(current.count));
  }
  if (std::find(current.source_conditions.begin(), current.source_conditions.end(), addition.condition_id()) !=
      current.source_conditions.end()) {
    throw DuplicateSourceError("condition '" + addition.condition_id() + "' is already fused");
  }
  FusedReferenceSet fused = current;
  fused.source_conditions.push_back(addition.condition_id());
  add_set(fused, addition);
  finalize(fused);
  return fused;
}

FusedReferenceSet bundle_groups(const DescriptorSet& set, const std::map<std::string, std::vector<std::string>>& groups,
                                FusionOptions options) {
  if (groups.empty()) throw EmptyInputError("bundle_groups needs at least one group");
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(set.count());
  for (std::size_t i = 0; i < set.count(); ++i) index.emplace(set.frame_ids()[i], i);

  FusedReferenceSet fused;
  fused.dataset_id = set.dataset_id();
  fused.source_conditions = {set.condition_id()};
  fused.count = groups.size();
  fused.dim = set.dim();
  fused.normalized_output = options.normalize_output;
  fused.running_sum.assign(fused.count * fused.dim, 0.0);

  std::unordered_set<std::string_view> used;
  std::size_t out_row = 0;
  // std::map iterates in lexicographic key order.
  for (const auto& [place, frames] : groups) {
    if (frames.empty()) throw ValidationError("place group '" + place + "' is empty");
    for (const auto& frame : frames) {
      const auto it = index.find(frame);
      if (it == index.end()) {
        throw LookupError("place group '" + place + "' references unknown frame '" + frame + "'");
      }
      if (!used.insert(it->first).second) {
        throw ValidationError("frame '" + frame + "' appears in more than one place group");
      }
      accumulate_normalized(set.row(it->second), fused.running_sum.data() + out_row * fused.dim);
    }
    fused.frame_ids.push_back(place);
    ++out_row;
  }
  finalize(fused);
  return fused;
}

DatasetSignature bundle_dataset(std::span<const DescriptorSet> sets) {
  if (sets.empty()) throw EmptyInputError("bundle_dataset needs at least one set");
  DatasetSignature sig;
  sig.dataset_id = sets.front().dataset_id();
  sig.dim = sets.front().dim();
  sig.vector.assign(sig.dim, 0.0);
  for (const auto& s : sets) {
    if (s.dim() != sig.dim) {
      throw DimensionError("set '" + s.condition_id() + "' has dim " + std::to_string(s.dim()) + ", expected " +
                           std::to_string(sig.dim));
    }
    for (std::size_t i = 0; i < s.count(); ++i) accumulate_normalized(s.row(i), sig.vector.data());
    sig.source_vector_count += s.count();
    ++sig.source_set_count;
    sig.source_conditions.push_back(s.condition_id());
  }
  return sig;
}

}  // namespace hops
