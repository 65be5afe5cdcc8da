#include "cubeval/sampling.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace cubeval {

Mat3 random_rotation(SplitMix64& rng) {
  // Shoemake's subgroup algorithm: uniform unit quaternion from 3 uniforms.
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  constexpr double two_pi = 6.283185307179586476925286766559;
  const Eigen::Quaterniond q(a * std::sin(two_pi * u2), a * std::cos(two_pi * u2),
                             b * std::sin(two_pi * u3), b * std::cos(two_pi * u3));
  return q.normalized().toRotationMatrix();
}

Cuboid random_cuboid(SplitMix64& rng, const Vec3& center_lo, const Vec3& center_hi,
                     double dim_lo, double dim_hi) {
  Vec3 center, dims;
  for (int i = 0; i < 3; ++i) center[i] = rng.uniform(center_lo[i], center_hi[i]);
  for (int i = 0; i < 3; ++i) dims[i] = rng.uniform(dim_lo, dim_hi);
  return Cuboid(center, dims, random_rotation(rng));
}

std::vector<Cuboid> random_cuboids(std::uint64_t seed, std::size_t count) {
  SplitMix64 rng(seed);
  std::vector<Cuboid> out;
  out.reserve(count);
  const Vec3 lo(-4.0, -4.0, -4.0), hi(4.0, 4.0, 4.0);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_cuboid(rng, lo, hi, 0.5, 2.5));
  return out;
}

}  // namespace cubeval
