#ifndef FAIRLTR_RNG_HPP
#define FAIRLTR_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace fairltr {

// SplitMix64 finalizer, used to decorrelate derived seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d9746997f4dbb1ULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_name(std::string_view name) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable seed derivation: every component stream is root ^ hashed name,
// optionally extended with integer indices (query, impression, sample, ...).
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view component) {
    return mix64(root ^ hash_name(component));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view component,
                                 std::uint64_t a) {
    return mix64(derive_seed(root, component) ^ mix64(a));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view component,
                                 std::uint64_t a, std::uint64_t b) {
    return mix64(derive_seed(root, component, a) ^ mix64(b + 0x517cc1b727220a95ULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace fairltr

#endif
