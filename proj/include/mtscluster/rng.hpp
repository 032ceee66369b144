#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mtscluster {

/// splitmix64 mixing step; used to derive independent seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for replica `index` of a run with the given master seed. Replicas
/// get statistically independent streams and the mapping is stable across
/// platforms.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(master_seed ^ splitmix64(index + 1));
}

using Rng = std::mt19937_64;

/// Uniform integer in [0, n). Rejection sampling on the raw 64-bit stream,
/// so results do not depend on the standard library's distribution
/// implementation.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return static_cast<std::size_t>(v % n);
}

/// Uniform double in [0, 1) with 53 bits of randomness.
inline double uniform_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Fisher-Yates shuffle built on uniform_index for platform-stable output.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

/// Index sampled with probability proportional to the given non-negative
/// weights. Requires a positive total weight.
inline std::size_t weighted_index(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform_real(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

}  // namespace mtscluster
