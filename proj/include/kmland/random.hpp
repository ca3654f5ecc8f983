#pragma once

#include "kmland/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace kmland {

using Rng = std::mt19937_64;

/// Seed of the `stream`-th independent substream derived from `seed` (splitmix64 mixing).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(substream_seed(seed, stream));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline Vector standard_normal(Rng& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = normal(rng);
  return v;
}

/// Uniform point in the d-ball of the given radius: isotropic direction, radius ∝ U^(1/d).
inline Vector uniform_in_ball(Rng& rng, int d, double radius) {
  Vector dir = standard_normal(rng, d);
  double norm = dir.norm();
  while (norm == 0.0) {
    dir = standard_normal(rng, d);
    norm = dir.norm();
  }
  const double rad = radius * std::pow(uniform01(rng), 1.0 / d);
  return dir * (rad / norm);
}

inline Vector random_unit_vector(Rng& rng, int d) {
  Vector v = standard_normal(rng, d);
  while (v.norm() == 0.0) v = standard_normal(rng, d);
  return v.normalized();
}

}  // namespace kmland
