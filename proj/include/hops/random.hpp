#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace hops {

// PCG-XSH-RR with 64-bit state and 32-bit output (O'Neill's pcg32).
// Seeding follows pcg32_srandom_r(seed, stream) from the reference
// implementation so any port can reproduce the exact sequence.
class Pcg32 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kDefaultStream = 0xda3e39cb94b95bdbULL;

  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = kDefaultStream) {
    state_ = 0;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    state_ = old * kMultiplier + inc_;
    const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
  }

  // Uniform double in [0, 1) with 53 random bits: (a >> 5) * 2^26 + (b >> 6), scaled by 2^-53.
  double next_unit() {
    const std::uint32_t a = next_u32() >> 5;
    const std::uint32_t b = next_u32() >> 6;
    return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b)) * (1.0 / 9007199254740992.0);
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

// Standard normal deviates by the basic Box-Muller transform. Each pair of
// uniforms (u1, u2) yields cos then sin outputs, in that order; u1 is taken
// as 1 - next_unit() so the logarithm never sees zero.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed, std::uint64_t stream = Pcg32::kDefaultStream)
      : rng_(seed, stream) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - rng_.next_unit();
    const double u2 = rng_.next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  Pcg32 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hops
