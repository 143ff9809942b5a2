#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace mmra {

/// Purpose keys for deriving independent substreams. Adding a purpose never
/// perturbs draws of the existing ones.
enum class StreamPurpose : std::uint64_t {
    Placement = 1,
    Activation = 2,
    Channel = 3,
    Noise = 4,
    Intercell = 5,
    DlNoise = 6,
    Backoff = 7,
    Scenario = 8,
};

/// Counter-based generator: output i is a mix of (master seed, stream, purpose,
/// i). Streams keyed on distinct (seed, stream, purpose) tuples are
/// independent, so trials can run on any number of workers with identical
/// results.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream, StreamPurpose purpose)
        : key_(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ stream) ^
               mix(static_cast<std::uint64_t>(purpose) * 0xbf58476d1ce4e5b9ULL)) {}

    std::uint64_t next_u64() {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return mix(key_ ^ counter_);
    }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        return next_u64() % n;
    }

    /// Standard real Gaussian via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Circular complex Gaussian CN(0, 1).
    std::complex<double> cnormal() {
        const double s = std::numbers::sqrt2;
        return {normal() / s, normal() / s};
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace mmra
