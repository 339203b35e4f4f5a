#pragma once

#include <cstdint>
#include <random>

// Substream derivation: one root seed per run, independent generators keyed by
// (purpose, round, index). Adding instrumentation that draws from its own
// substream cannot perturb the sampling sequence.

namespace dmarket {

enum class Stream : std::uint64_t {
    sampling = 1,
    oracle = 2,
    scenario = 3,
    shapley = 4,
    acceptance = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::mt19937_64 substream(std::uint64_t root_seed, Stream purpose,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t s = splitmix64(root_seed);
    s = splitmix64(s ^ static_cast<std::uint64_t>(purpose));
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    return std::mt19937_64(s);
}

// Uniform double in [0,1) with 53 random bits; bit-reproducible everywhere.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace dmarket
