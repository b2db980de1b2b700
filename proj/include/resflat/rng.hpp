#pragma once

#include <cstdint>
#include <vector>

namespace resflat {

// SplitMix64: 64-bit state, portable across platforms and languages.
// Reference: Sebastiano Vigna, http://xorshift.di.unimi.it/splitmix64.c
struct RngState {
    std::uint64_t state = 0;
};

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// Returns the next 64-bit value and the advanced state.
inline std::pair<RngState, std::uint64_t> splitmix64_next(RngState s) {
    std::uint64_t z = (s.state += kGoldenGamma);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return {s, z ^ (z >> 31)};
}

// Maps a raw 64-bit draw to a double in [0, 1) using the top 53 bits.
inline double u64_to_unit(std::uint64_t v) {
    return static_cast<double>(v >> 11) * 0x1.0p-53;
}

inline std::pair<RngState, double> uniform01(RngState s) {
    auto [s2, v] = splitmix64_next(s);
    return {s2, u64_to_unit(v)};
}

// Reserved layer indices for seed derivation.
inline constexpr std::uint64_t kProjectionLayerIndex = 0;
inline constexpr std::uint64_t kClassifierLayerIndex = 1ULL << 32;

// Seed for one parameter block, independent of the order blocks are built in.
// Injective over the index range used (odd stride modulo 2^64).
inline std::uint64_t layer_seed(std::uint64_t base, std::uint64_t layer_index) {
    return base + (layer_index + 1) * kGoldenGamma;
}

// `count` draws from uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
// Biases are initialized to zero elsewhere; this covers weights only.
std::vector<double> glorot_uniform(std::uint64_t seed, int fan_in, int fan_out,
                                   std::size_t count);

}  // namespace resflat
