#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hops/random.hpp"

using hops::GaussianSource;
using hops::Pcg32;

TEST_CASE("pcg32 matches the reference demo sequence") {
  // pcg32-demo output for pcg32_srandom_r(&rng, 42, 54).
  Pcg32 rng(42, 54);
  const std::uint32_t expected[] = {0xa15c02b7u, 0x7b47f409u, 0xba1d3330u, 0x83d2f293u, 0xbfa4784bu, 0xcbed606eu};
  for (auto e : expected) CHECK(rng.next_u32() == e);
}

TEST_CASE("unit doubles stay in [0, 1)") {
  Pcg32 rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("box-muller emits cos then sin from one uniform pair") {
  Pcg32 rng(99);
  GaussianSource gauss(99);
  for (int pair = 0; pair < 10; ++pair) {
    const double u1 = 1.0 - rng.next_unit();
    const double u2 = rng.next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    CHECK(gauss.next() == r * std::cos(2.0 * std::numbers::pi * u2));
    CHECK(gauss.next() == r * std::sin(2.0 * std::numbers::pi * u2));
  }
}

TEST_CASE("gaussian moments") {
  GaussianSource gauss(2024);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = gauss.next();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(n));
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("streams are independent sequences") {
  Pcg32 a(5, 1), b(5, 2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u32() == b.next_u32();
  CHECK(same < 3);
}
