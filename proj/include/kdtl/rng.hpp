#pragma once

#include <cstdint>
#include <random>

namespace kdtl {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Engine for substream `stream` of `seed`. Substreams are a pure function of
/// (seed, stream), so Monte Carlo shards give the same numbers however they
/// are scheduled.
inline Rng substream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform on (0, 1], safe for log().
inline double uniform_open01(Rng& rng) { return 1.0 - uniform01(rng); }

}  // namespace kdtl
