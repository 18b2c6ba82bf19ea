#pragma once

#include <cstdint>
#include <random>

namespace clusteradj {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea & Flood); a bijective 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of stream `index` under `master`. Streams for distinct indices are
/// decorrelated, and the mapping does not depend on how work is scheduled, so
/// serial and threaded runs consume identical draws.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index);

inline Engine make_engine(std::uint64_t seed) { return Engine{seed}; }

inline Engine make_stream(std::uint64_t master, std::uint64_t index) {
    return Engine{stream_seed(master, index)};
}

/// Reserved stream index for population construction when the population
/// seed is derived from the experiment's master seed.
inline constexpr std::uint64_t kPopulationStream = 0xFFFF'FFFF'FFFF'FFFFULL;

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace clusteradj
