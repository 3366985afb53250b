#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace crbf {

namespace detail {

// splitmix64 finalizer, used only for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Deterministic random stream: std::mt19937_64 (bit-stable across
/// platforms) with Box-Muller normal sampling on top of explicit
/// 53-bit uniforms, so the whole sample sequence is reproducible from
/// the seed alone. Sub-streams for parallel workers are derived from
/// (master seed, worker index) via splitmix64 mixing.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    static RngStream substream(std::uint64_t master, std::uint64_t worker) {
        return RngStream(detail::splitmix64(detail::splitmix64(master) ^
                                            detail::splitmix64(worker + 1)));
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1]; never zero, safe for log().
    double uniform01_open_below() {
        return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    }

    /// One Box-Muller pair of independent standard normals.
    std::pair<double, double> normal_pair() {
        const double u1 = uniform01_open_below();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        return {r * std::cos(t), r * std::sin(t)};
    }

    /// Circular complex Gaussian CG(0, variance): real and imaginary
    /// parts independent N(0, variance/2).
    std::complex<double> complex_gaussian(double variance) {
        if (variance < 0.0)
            throw std::invalid_argument("complex_gaussian: negative variance");
        auto [a, b] = normal_pair();
        const double s = std::sqrt(variance * 0.5);
        return {a * s, b * s};
    }

    /// Unbiased uniform integer in [0, n) via rejection sampling.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0)
            throw std::invalid_argument("uniform_below: n == 0");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    /// Fisher-Yates shuffle; does not use std::shuffle, whose draw
    /// sequence is implementation-defined.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

} // namespace crbf
