#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace noda {

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

/// Derives an independent stream for sub-purposes (noise vs. schedule vs. operator)
/// from one user-facing seed. SplitMix64 finalizer keeps nearby seeds uncorrelated.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::vector<double> gaussian_vector(Rng& rng, size_t count, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> out(count);
  for (auto& v : out) v = dist(rng);
  return out;
}

}  // namespace noda
