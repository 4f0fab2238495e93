#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace medpipe {

// Seeded RNG behind every --seed flag. std::mt19937_64 has a fully specified
// output sequence, but the standard <random> distributions do not, so the
// uniform/normal draws are derived from raw engine words here to keep seeded
// runs bit-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; second value cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.28318530717958647692 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace medpipe
