#pragma once

#include <cmath>
#include <cstdint>

namespace pmfsim {

/// 64-bit avalanche (splitmix64 finalizer).
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

/// Derive a child seed from a parent seed and a stream index, so that
/// distinct simulation strands never share a sequence.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed + 0x9E3779B97F4A7C15ull) ^
           mix64(stream * 0xD2B74407B1CE6E93ull + 0x8BB84B93962EACC9ull);
}

/// Deterministic random stream keyed by (seed, stream index).
///
/// A splitmix64 generator: the n-th draw of Stream(s, k) depends only on
/// (s, k, n), so any strand of a simulation can be reproduced -- or run in
/// parallel -- without replaying the others. Same key, same platform:
/// bit-identical sequences, including the normal and Poisson transforms.
class Stream {
public:
    explicit Stream(std::uint64_t seed, std::uint64_t stream = 0)
        : state_(derive_seed(seed, stream)) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix64(state_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1]; safe as a log() argument.
    double next_double_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via the Box-Muller transform (second value cached).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_double_open();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Poisson draw. Product-of-uniforms inversion below mean 10, the
    /// Hormann PTRS transformed-rejection sampler above. Both paths use only
    /// this stream, keeping runs reproducible for any mean.
    long long next_poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        if (mean < 10.0) return poisson_inversion(mean);
        return poisson_ptrs(mean);
    }

private:
    long long poisson_inversion(double mean) {
        const double limit = std::exp(-mean);
        double prod = 1.0;
        long long k = -1;
        do {
            ++k;
            prod *= next_double_open();
        } while (prod > limit);
        return k;
    }

    long long poisson_ptrs(double mean) {
        const double slam = std::sqrt(mean);
        const double loglam = std::log(mean);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = next_double() - 0.5;
            const double v = next_double_open();
            const double us = 0.5 - std::abs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= vr) return static_cast<long long>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            const double k = kf;
            if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
                k * loglam - mean - std::lgamma(k + 1.0)) {
                return static_cast<long long>(kf);
            }
        }
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace pmfsim
