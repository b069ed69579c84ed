#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace degrade::rng {

// Counter-based generation: every value is a pure function of (key, counter),
// so output is independent of iteration order, tiling, and worker count.

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (b + kGolden + (a << 6) + (a >> 2)));
}

constexpr std::uint64_t hash_bytes(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a 64
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return mix64(h);
}

/// Raw 64 bits at position `counter` of the stream keyed by `key`.
constexpr std::uint64_t bits_at(std::uint64_t key, std::uint64_t counter) {
    return mix64(key + counter * kGolden);
}

/// Uniform double in [0, 1).
inline double uniform_at(std::uint64_t key, std::uint64_t counter) {
    return static_cast<double>(bits_at(key, counter) >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1]; safe as a log() argument.
inline double uniform_open_at(std::uint64_t key, std::uint64_t counter) {
    return static_cast<double>((bits_at(key, counter) >> 11) + 1) * 0x1.0p-53;
}

/// Standard normal draw, one per index, via Box-Muller on two counter slots.
inline double normal_at(std::uint64_t key, std::uint64_t index) {
    double u1 = uniform_open_at(key, 2 * index);
    double u2 = uniform_at(key, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace degrade::rng
