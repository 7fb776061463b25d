#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "vflux/errors.hpp"

namespace vflux {

/// Counter-mode generator built on the SplitMix64 finalizer:
/// output_i = mix(key + i * golden_gamma).
///
/// Streams are derived by folding identifying integers (signal hash, window
/// index, method, ...) into the key, so every task owns an independent,
/// platform-stable sequence. Results depend only on (key, draw index).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t x) {
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

    /// Fold a path of stream identifiers into a seed.
    static std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        std::uint64_t k = mix(seed + kGamma);
        for (std::uint64_t id : path) {
            k = mix(k ^ mix(id + kGamma));
        }
        return k;
    }

    std::uint64_t next_u64() {
        counter_ += kGamma;
        return mix(key_ + counter_);
    }

    /// Uniform double in [0, 1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw ParameterError("next_below: n must be positive");
        std::uint64_t v = static_cast<std::uint64_t>(next_unit() * static_cast<double>(n));
        return v >= n ? n - 1 : v;
    }

    /// Unit-mean exponential via inverse CDF.
    double next_exp() {
        return -std::log(1.0 - next_unit());
    }

    /// Standard normal, Box-Muller (consumes two draws).
    double next_normal() {
        double u1 = 1.0 - next_unit(); // (0, 1]
        double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Gamma(shape, scale). Shape 1 reduces to the exponential inverse CDF;
    /// shape > 1 uses Marsaglia-Tsang squeeze; shape < 1 uses the boost
    /// Gamma(a) = Gamma(a+1) * U^(1/a).
    double next_gamma(double shape, double scale) {
        if (!(shape > 0.0) || !(scale > 0.0)) {
            throw ParameterError("next_gamma: shape and scale must be positive");
        }
        if (shape == 1.0) return scale * next_exp();
        if (shape < 1.0) {
            double g = next_gamma(shape + 1.0, 1.0);
            double u = 1.0 - next_unit();
            return scale * g * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = next_normal();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            double v = t * t * t;
            double u = 1.0 - next_unit(); // (0, 1]
            double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return scale * d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return scale * d * v;
        }
    }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    static constexpr double kPi = 3.141592653589793238462643383279502884;

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// FNV-1a 64-bit, used for string stream ids and artifact digests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace vflux
