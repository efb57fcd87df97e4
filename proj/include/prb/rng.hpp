#pragma once

#include <cstdint>
#include <random>

namespace prb {

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator for (seed, stream); streams are addressed by counter,
// so results do not depend on thread scheduling.
inline Rng stream_rng(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(splitmix64(seed)), static_cast<uint32_t>(splitmix64(seed) >> 32),
                    static_cast<uint32_t>(splitmix64(stream ^ 0x5851f42d4c957f2dULL)),
                    static_cast<uint32_t>(splitmix64(stream ^ 0x5851f42d4c957f2dULL) >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace prb
