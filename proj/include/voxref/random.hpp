#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

namespace voxref {

// std::mt19937_64 output is fixed by the standard, the distributions are not.
// Everything below is built on raw engine output so seeded runs agree across
// standard library implementations.

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t seed_part(std::uint64_t v) noexcept { return v; }
inline std::uint64_t seed_part(std::string_view s) noexcept { return fnv1a64(s); }

/// Mixes a base seed with any number of integer or string components.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t base, const Parts&... parts) noexcept {
    std::uint64_t h = splitmix64(base);
    ((h = splitmix64(h ^ splitmix64(seed_part(parts) + 0x632be59bd9b4e019ULL))), ...);
    return h;
}

/// Uniform integer in [0, bound) by rejection; bound must be > 0.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Standard normal deviate (Box-Muller, one value per call).
inline double standard_normal(std::mt19937_64& gen) {
    double u1;
    do {
        u1 = uniform_unit(gen);
    } while (u1 <= 0.0);
    const double u2 = uniform_unit(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// First `k` entries of a uniformly random permutation of [0, n)
/// (forward Fisher-Yates, so any prefix of a longer draw is identical).
inline std::vector<std::size_t> seeded_permutation_prefix(std::size_t n, std::size_t k,
                                                          std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 gen(seed);
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_below(gen, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace voxref
