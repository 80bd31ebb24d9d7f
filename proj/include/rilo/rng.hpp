#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace rilo {

// splitmix64 finalizer; cheap way to turn correlated seeds (seed, seed+1, ...)
// into decorrelated engine seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Engine for an independent stream derived from (seed, stream). Streams are
// stable: stream k sees the same draws no matter how many other streams exist.
inline std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x51ed2701ULL)));
}

// The helpers below avoid std::uniform_*_distribution, whose draw sequences
// are implementation-defined; with these, a seed pins the exact output.

// Unbiased draw in [0, n) by rejection.
inline std::uint64_t bounded_uint(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

// In-place Fisher–Yates shuffle driven by bounded_uint.
template <typename T>
void shuffle_vector(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded_uint(rng, i)]);
}

}  // namespace rilo
