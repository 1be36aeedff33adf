#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "bfvae/ndcore/matrix.hpp"

namespace bfvae {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based seed splitting: the child seed depends only on the base
/// seed and the ordered list of counters, never on generation order.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> counters) noexcept {
    std::uint64_t s = splitmix64(base);
    for (std::uint64_t c : counters) s = splitmix64(s ^ splitmix64(c + 0x632be59bd9b4e019ULL));
    return s;
}

// Stream tags so that independent consumers of one run seed never collide.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kTrain = 2;
inline constexpr std::uint64_t kSample = 3;
inline constexpr std::uint64_t kData = 4;
inline constexpr std::uint64_t kTrial = 5;
}  // namespace stream

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> counters) {
    return Rng(derive_seed(base, counters));
}

inline double standard_normal(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return n(rng);
}

inline void fill_standard_normal(Rng& rng, std::span<double> out) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : out) v = n(rng);
}

inline Matrix standard_normal_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    fill_standard_normal(rng, m.flat());
    return m;
}

inline double uniform(Rng& rng, double lo, double hi) {
    if (lo == hi) return lo;
    std::uniform_real_distribution<double> u(lo, hi);
    return u(rng);
}

}  // namespace bfvae
