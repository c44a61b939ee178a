#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hops/descriptor_store.hpp"
#include "hops/fusion.hpp"

namespace hops {

/// Seeded Gaussian random projection from `input_dim` to `output_dim`.
/// Entries are N(0, 1/input_dim). The seed fully determines the matrix.
struct ProjectionSpec {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::uint64_t seed = 0;
  // Permit output_dim > input_dim (a warning is printed by the CLI).
  bool allow_expansion = false;

  void validate() const;
};

/// Row-major output_dim x input_dim matrix.
struct ProjectionMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

// Entries are generated sequentially in row-major order: each is
// GaussianSource(seed).next() * sqrt(1 / input_dim).
ProjectionMatrix materialize(const ProjectionSpec& spec);

struct ProjectionOptions {
  bool renormalize = true;
};

struct ProjectedSet {
  DescriptorSet set;
  std::size_t zero_rows = 0;
};

ProjectedSet project(const ProjectionSpec& spec, const DescriptorSet& set, ProjectionOptions options = {});
ProjectedSet project(const ProjectionMatrix& matrix, const DescriptorSet& set, ProjectionOptions options = {});

// Projects the stored rows; the running sum is projected too, so the result
// can still take incremental additions in the projected space.
FusedReferenceSet project(const ProjectionSpec& spec, const FusedReferenceSet& fused);

}  // namespace hops
