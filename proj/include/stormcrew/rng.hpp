#pragma once

#include <cstdint>
#include <random>

namespace stormcrew {

using Rng = std::mt19937_64;

// Uniform draws built directly on the raw 64-bit stream so that results are
// stable across standard-library implementations (std::uniform_*_distribution
// is implementation-defined).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t draw = rng();
  while (draw >= bound) draw = rng();
  return static_cast<std::size_t>(draw % n);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// splitmix64 step, used to derive independent child seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace stormcrew
