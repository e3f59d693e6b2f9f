#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace frog {

/// One step of the splitmix64 sequence (Steele, Lea & Flood). Advances
/// `state` and returns the next output. Used for seeding and stream
/// derivation, never as the main generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed for substream `index` of a base seed.
///
/// Defined as one splitmix64 step of `base XOR (0xD1B54A32D192ED03 * (index + 1))`.
/// Distinct (base, index) pairs map to distinct, uncorrelated generator
/// streams, so parallel runs and per-step tangent draws never collide.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t s = base ^ (0xD1B54A32D192ED03ULL * (index + 1));
  return splitmix64(s);
}

/// xoshiro256++ (Blackman & Vigna, 2019), the library-wide generator.
///
/// The 256-bit state is filled from the 64-bit seed with four splitmix64
/// steps, as recommended by the authors. All sampling in this library goes
/// through this class, so a run is reproducible across machines from its
/// seed alone. Gaussians use the Box-Muller transform (pairs generated,
/// second value cached).
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal draw.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 == 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, bound), bound >= 1. Rejection sampling, no
  /// modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (~bound + 1) % bound;  // == 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Fair coin from the top bit.
  bool flip() { return (next() >> 63) != 0; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace frog
