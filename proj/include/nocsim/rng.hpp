#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace nocsim {

inline constexpr double kPi = 3.14159265358979323846;

// Deterministic random source. std::normal_distribution is
// implementation-defined, so Gaussians come from an explicit Box-Muller
// transform and every trace is reproducible from the seed alone.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in (0, 1]; never returns 0 so log() is safe.
    double uniform() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double a = 2.0 * kPi * uniform();
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Circularly symmetric complex Gaussian with E|x|^2 = variance.
    std::complex<double> cgaussian(double variance) {
        const double s = std::sqrt(variance / 2.0);
        return {s * gaussian(), s * gaussian()};
    }

    // Uniform integer in [0, n).
    std::uint64_t integer(std::uint64_t n) {
        // rejection sampling keeps the distribution exact
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace nocsim
