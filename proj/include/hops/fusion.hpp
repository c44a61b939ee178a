#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hops/descriptor_store.hpp"

namespace hops {

/// Per-place signatures bundled from K source sets.
///
/// Keeps the raw element-wise running sum (double precision) alongside the
/// stored rows so further sets can be folded in exactly. `data` holds the
/// sum itself, or the sum unit-normalized per row when `normalized_output`.
struct FusedReferenceSet {
  std::string dataset_id;
  std::vector<std::string> source_conditions;
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<double> running_sum;
  std::vector<float> data;
  std::vector<std::string> frame_ids;
  bool normalized_output = true;

  std::span<const float> row(std::size_t i) const { return std::span<const float>(data).subspan(i * dim, dim); }

  // "fused:<c1>+<c2>+..."
  std::string condition_id() const;

  DescriptorSet as_descriptor_set() const;
};

/// Whole-dataset bundle used for environment identification.
struct DatasetSignature {
  std::string dataset_id;
  std::size_t dim = 0;
  std::vector<double> vector;
  std::size_t source_set_count = 0;
  std::size_t source_vector_count = 0;
  std::vector<std::string> source_conditions;

  // 1 x dim set with condition "dataset-signature" and the dataset id as its frame id.
  DescriptorSet as_descriptor_set() const;
  static DatasetSignature from_descriptor_set(const DescriptorSet& set);
};

inline constexpr const char* kSignatureCondition = "dataset-signature";

struct FusionOptions {
  bool normalize_output = true;
};

FusedReferenceSet bundle_aligned(std::span<const DescriptorSet> sets, FusionOptions options = {});

FusedReferenceSet bundle_incremental(const FusedReferenceSet& current, const DescriptorSet& addition);

// One output row per place id, in lexicographic place id order.
FusedReferenceSet bundle_groups(const DescriptorSet& set, const std::map<std::string, std::vector<std::string>>& groups,
                                FusionOptions options = {});

DatasetSignature bundle_dataset(std::span<const DescriptorSet> sets);

}  // namespace hops
