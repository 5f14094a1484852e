#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace explika {

// std::mt19937_64 output is fully specified by the standard, so seeded runs
// reproduce bit-for-bit across platforms. The distribution helpers below are
// hand-rolled for the same reason: std::normal_distribution and friends are
// implementation-defined.
using Rng = std::mt19937_64;

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
} // namespace detail

// Deterministic per-unit seed so parallel and serial schedules agree exactly.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t unit) {
    return detail::splitmix64(detail::splitmix64(master) ^ (unit + 0x632be59bd9b4e019ull));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t unit_a, std::uint64_t unit_b) {
    return derive_seed(derive_seed(master, unit_a), unit_b);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t unit) {
    return Rng(derive_seed(master, unit));
}

// Uniform in [0, 1) with 53 random mantissa bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Unbiased integer in [0, n) via rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

// Standard normal via Box-Muller; two uniforms per draw, no cached state.
inline double normal01(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// First k slots of a Fisher-Yates shuffle of 0..n-1.
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

} // namespace explika
