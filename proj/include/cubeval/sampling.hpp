#pragma once

#include <cstdint>
#include <vector>

#include "cubeval/geometry.hpp"

namespace cubeval {

/// SplitMix64: tiny, portable, deterministic. Used wherever reproducible
/// streams are part of a contract (bench, MC oracle, fixtures).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

/// Uniform random rotation (Shoemake quaternion method).
Mat3 random_rotation(SplitMix64& rng);

Cuboid random_cuboid(SplitMix64& rng, const Vec3& center_lo, const Vec3& center_hi,
                     double dim_lo, double dim_hi);

/// Seeded batch of cuboids used by the benchmark: centers in [-4, 4]^3,
/// dims in [0.5, 2.5], uniform rotations.
std::vector<Cuboid> random_cuboids(std::uint64_t seed, std::size_t count);

}  // namespace cubeval
