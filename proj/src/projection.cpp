#include "hops/projection.hpp"

#include <algorithm>
#include <cmath>

#include "hops/errors.hpp"
#include "hops/random.hpp"

namespace hops {

namespace {

constexpr std::size_t kRowBlock = 8;

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t c = 0;
  for (; c + 4 <= n; c += 4) {
    s0 += a[c] * b[c];
    s1 += a[c + 1] * b[c + 1];
    s2 += a[c + 2] * b[c + 2];
    s3 += a[c + 3] * b[c + 3];
  }
  for (; c < n; ++c) s0 += a[c] * b[c];
  return (s0 + s1) + (s2 + s3);
}

// out = in * G^T for `count` row-major input rows, accumulated in double.
// Input rows are processed in blocks so each matrix row is read once per block.
void apply_rows(const ProjectionMatrix& g, const double* in, std::size_t count, double* out) {
  const auto blocks = static_cast<std::ptrdiff_t>((count + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t first = static_cast<std::size_t>(blk) * kRowBlock;
    const std::size_t last = std::min(count, first + kRowBlock);
    for (std::size_t r = 0; r < g.rows; ++r) {
      const double* gr = g.values.data() + r * g.cols;
      for (std::size_t i = first; i < last; ++i) out[i * g.rows + r] = dot(gr, in + i * g.cols, g.cols);
    }
  }
}

void check_dim(const ProjectionMatrix& g, std::size_t dim, const std::string& what) {
  if (dim != g.cols) {
    throw DimensionError(what + " has dim " + std::to_string(dim) + ", projection expects " +
                         std::to_string(g.cols));
  }
}

}  // namespace

void ProjectionSpec::validate() const {
  if (input_dim == 0) throw ValidationError("projection input dim must be positive");
  if (output_dim == 0) throw ValidationError("projection output dim must be positive");
  if (output_dim > input_dim && !allow_expansion) {
    throw ValidationError("projection output dim " + std::to_string(output_dim) + " exceeds input dim " +
                          std::to_string(input_dim) + " (set the expansion override to allow)");
  }
}

ProjectionMatrix materialize(const ProjectionSpec& spec) {
  spec.validate();
  ProjectionMatrix g;
  g.rows = spec.output_dim;
  g.cols = spec.input_dim;
  g.values.resize(g.rows * g.cols);
  const double scale = std::sqrt(1.0 / static_cast<double>(spec.input_dim));
  GaussianSource gauss(spec.seed);
  for (double& v : g.values) v = gauss.next() * scale;
  return g;
}

ProjectedSet project(const ProjectionMatrix& matrix, const DescriptorSet& set, ProjectionOptions options) {
  check_dim(matrix, set.dim(), "set '" + set.condition_id() + "'");
  const std::size_t out_dim = matrix.rows;
  const std::vector<double> in(set.data().begin(), set.data().end());
  std::vector<double> out(set.count() * out_dim);
  apply_rows(matrix, in.data(), set.count(), out.data());
  std::vector<float> data(out.size());
  std::size_t zero_rows = 0;
  for (std::size_t i = 0; i < set.count(); ++i) {
    const double* row = out.data() + i * out_dim;
    double scale = 1.0;
    if (options.renormalize) {
      double sq = 0.0;
      for (std::size_t j = 0; j < out_dim; ++j) sq += row[j] * row[j];
      if (sq == 0.0) {
        ++zero_rows;
      } else {
        scale = 1.0 / std::sqrt(sq);
      }
    }
    float* dst = data.data() + i * out_dim;
    for (std::size_t j = 0; j < out_dim; ++j) dst[j] = static_cast<float>(row[j] * scale);
  }
  return {DescriptorSet(set.dataset_id(), set.condition_id(), set.count(), out_dim, std::move(data), set.frame_ids()),
          zero_rows};
}

ProjectedSet project(const ProjectionSpec& spec, const DescriptorSet& set, ProjectionOptions options) {
  if (set.dim() != spec.input_dim) {
    throw DimensionError("set '" + set.condition_id() + "' has dim " + std::to_string(set.dim()) +
                         ", projection expects " + std::to_string(spec.input_dim));
  }
  return project(materialize(spec), set, options);
}

FusedReferenceSet project(const ProjectionSpec& spec, const FusedReferenceSet& fused) {
  if (fused.dim != spec.input_dim) {
    throw DimensionError("fused set has dim " + std::to_string(fused.dim) + ", projection expects " +
                         std::to_string(spec.input_dim));
  }
  const auto g = materialize(spec);
  FusedReferenceSet out = fused;
  out.dim = g.rows;
  out.running_sum.assign(out.count * out.dim, 0.0);
  out.data.assign(out.count * out.dim, 0.0f);
  apply_rows(g, fused.running_sum.data(), out.count, out.running_sum.data());
  for (std::size_t i = 0; i < out.count; ++i) {
    const double* sum = out.running_sum.data() + i * out.dim;
    double sq = 0.0;
    for (std::size_t j = 0; j < out.dim; ++j) sq += sum[j] * sum[j];
    const double scale = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
    float* dst = out.data.data() + i * out.dim;
    for (std::size_t j = 0; j < out.dim; ++j) dst[j] = static_cast<float>(sum[j] * scale);
  }
  out.normalized_output = true;
  return out;
}

}  // namespace hops
