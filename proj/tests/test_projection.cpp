#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hops/errors.hpp"
#include "hops/projection.hpp"
#include "oracles.hpp"

using namespace hops;

namespace {

double euclid(std::span<const float> a, std::span<const float> b) {
  long double sq = 0.0L;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const long double d = static_cast<long double>(a[j]) - b[j];
    sq += d * d;
  }
  return static_cast<double>(std::sqrt(sq));
}

}  // namespace

TEST_CASE("materialize is deterministic per seed") {
  const ProjectionSpec spec{64, 16, 5};
  const auto a = materialize(spec);
  const auto b = materialize(spec);
  CHECK(a.values == b.values);
  const auto c = materialize(ProjectionSpec{64, 16, 6});
  CHECK(!std::equal(a.values.begin(), a.values.begin() + 64, c.values.begin()));
}

TEST_CASE("materialize moments for 4096 -> 512") {
  const ProjectionSpec spec{4096, 512, 1};
  const auto g = materialize(spec);
  REQUIRE(g.values.size() == 4096u * 512u);
  double sum = 0.0, sq = 0.0;
  for (double v : g.values) {
    sum += v;
    sq += v * v;
  }
  const double count = static_cast<double>(g.values.size());
  const double mean = sum / count;
  const double var = sq / count - mean * mean;
  const double expected_var = 1.0 / 4096.0;
  // Standard error of the mean is sqrt(var / count).
  CHECK(std::abs(mean) < 3.0 * std::sqrt(expected_var / count));
  CHECK(std::abs(var - expected_var) < 0.2 * expected_var);
}

TEST_CASE("ProjectionSpec validation") {
  CHECK_THROWS_AS(materialize(ProjectionSpec{16, 0, 1}), ValidationError);
  CHECK_THROWS_AS(materialize(ProjectionSpec{16, 32, 1}), ValidationError);
  CHECK_NOTHROW(materialize(ProjectionSpec{16, 32, 1, true}));
}

TEST_CASE("project") {
  const ProjectionSpec spec{64, 16, 9};

  SUBCASE("zero vector stays zero and is flagged") {
    const auto zero = DescriptorSet::from_rows("d", "z", 64, std::vector<float>(64, 0.0f));
    const auto out = project(spec, zero);
    CHECK(out.zero_rows == 1);
    for (float v : out.set.data()) CHECK(v == 0.0f);
  }
  SUBCASE("linear before renormalization") {
    const auto vw = testing::random_unit_rows(2, 64, 3);
    std::vector<float> sum(64);
    for (std::size_t j = 0; j < 64; ++j) sum[j] = vw[j] + vw[64 + j];
    const auto raw = ProjectionOptions{.renormalize = false};
    const auto pv = project(spec, DescriptorSet::from_rows("d", "v", 64, {vw.begin(), vw.begin() + 64}), raw).set;
    const auto pw = project(spec, DescriptorSet::from_rows("d", "w", 64, {vw.begin() + 64, vw.end()}), raw).set;
    const auto ps = project(spec, DescriptorSet::from_rows("d", "s", 64, sum), raw).set;
    for (std::size_t j = 0; j < 16; ++j) {
      const double expect = static_cast<double>(pv.row(0)[j]) + pw.row(0)[j];
      CHECK(std::abs(ps.row(0)[j] - expect) <= 1e-5 * std::max(1.0, std::abs(expect)));
    }
  }
  SUBCASE("rows are unit norm after projection") {
    const auto out = project(spec, testing::random_set(10, 64, 4)).set;
    CHECK(out.dim() == 16);
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(static_cast<double>(testing::norm_ld(out.row(i).data(), 16)) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(project(spec, testing::random_set(2, 32, 1)), DimensionError);
  }
  SUBCASE("bit identical across runs") {
    const auto set = testing::random_set(5, 64, 8);
    CHECK(project(spec, set).set == project(spec, set).set);
  }
}

TEST_CASE("projection matches a direct matrix-product oracle") {
  const ProjectionSpec spec{48, 12, 21};
  const auto g = materialize(spec);
  const auto set = testing::random_set(3, 48, 2);
  const auto out = project(spec, set, {.renormalize = false}).set;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t r = 0; r < 12; ++r) {
      long double acc = 0.0L;
      for (std::size_t c = 0; c < 48; ++c) acc += static_cast<long double>(g.values[r * 48 + c]) * set.row(i)[c];
      CHECK(out.row(i)[r] == doctest::Approx(static_cast<double>(acc)).epsilon(1e-6));
    }
  }
}

// With N(0, 1/n) entries every norm shrinks by sqrt(o / n) in expectation;
// distortion is measured after undoing that global scale.
namespace {

std::vector<double> difference_distortions(const ProjectionSpec& spec, std::size_t pairs, std::uint64_t seed) {
  const auto points = testing::random_unit_rows(2 * pairs, spec.input_dim, seed);
  std::vector<float> diffs(pairs * spec.input_dim);
  for (std::size_t p = 0; p < pairs; ++p) {
    for (std::size_t j = 0; j < spec.input_dim; ++j) {
      diffs[p * spec.input_dim + j] = points[2 * p * spec.input_dim + j] - points[(2 * p + 1) * spec.input_dim + j];
    }
  }
  const auto set = DescriptorSet::from_rows("d", "diff", spec.input_dim, diffs);
  const auto projected = project(spec, set, {.renormalize = false}).set;
  const double scale = std::sqrt(static_cast<double>(spec.input_dim) / static_cast<double>(spec.output_dim));
  const std::vector<float> zero_in(spec.input_dim, 0.0f), zero_out(spec.output_dim, 0.0f);
  std::vector<double> out;
  for (std::size_t p = 0; p < pairs; ++p) {
    const double before = euclid(set.row(p), zero_in);
    const double after = scale * euclid(projected.row(p), zero_out);
    out.push_back(std::abs(after - before) / before);
  }
  return out;
}

}  // namespace

TEST_CASE("pairwise distances are approximately preserved 1024 -> 256") {
  auto distortion = difference_distortions(ProjectionSpec{1024, 256, 3}, 100, 55);
  std::nth_element(distortion.begin(), distortion.begin() + 50, distortion.end());
  CHECK(distortion[50] < 0.15);
}

TEST_CASE("JL behaviour at 8448 -> 512") {
  const auto distortion = difference_distortions(ProjectionSpec{8448, 512, 17}, 1000, 91);
  const auto large = std::count_if(distortion.begin(), distortion.end(), [](double d) { return d > 0.25; });
  CHECK(large < 50);
}

TEST_CASE("projecting a fused set projects its running sum") {
  std::vector<DescriptorSet> sets = {testing::random_set(4, 32, 1, "a"), testing::random_set(4, 32, 2, "b")};
  const auto fused = bundle_aligned(sets);
  const ProjectionSpec spec{32, 8, 4};
  const auto projected = project(spec, fused);
  CHECK(projected.dim == 8);
  CHECK(projected.running_sum.size() == 32u);
  // Same as projecting the normalized fused rows directly (projection is linear, output renormalized).
  const auto direct = project(spec, fused.as_descriptor_set()).set;
  for (std::size_t e = 0; e < direct.data().size(); ++e) CHECK(std::abs(projected.data[e] - direct.data()[e]) <= 1e-5);
  // Further sets can still be folded in.
  const auto c = project(spec, testing::random_set(4, 32, 3, "c"), {.renormalize = false}).set;
  CHECK_NOTHROW(bundle_incremental(projected, c));
}
