#pragma once

// Deterministic random streams.  Every stochastic routine in the library
// draws from a RandomStream seeded explicitly by the caller; there is no
// global generator.  Sweep points get decorrelated child streams derived
// from (master seed, scenario name, point index) so that results are
// reproducible bit-for-bit regardless of evaluation order or thread count.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace heraldsim {

// One round of the splitmix64 output function (Steele/Lea/Flood).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a hash of a string, used to fold scenario names into seeds.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Child seed for one sweep point of one scenario.  Mixing the label and
// index through splitmix64 keeps nearby indices statistically independent
// even though the inputs differ in only a few bits.
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t point_index) {
    std::uint64_t s = master ^ fnv1a64(label);
    std::uint64_t a = splitmix64(s);
    s ^= point_index * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x632be59bd9b4e019ULL);
}

// Wrapper around std::mt19937_64 with the handful of samplers the
// simulation needs.  The distributions are implemented here rather than
// with std::*_distribution because the standard does not pin down those
// algorithms and we want identical streams on every platform.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Bernoulli trial; p slightly outside [0,1] from rounding is clamped.
    bool bernoulli(double p) {
        if (p < -1e-12 || p > 1.0 + 1e-12)
            throw std::invalid_argument("bernoulli: probability out of range");
        return uniform01() < p;
    }

    // Exponential with the given mean, by inversion.
    double exponential(double mean) {
        if (!(mean > 0.0))
            throw std::invalid_argument("exponential: mean must be positive");
        return -mean * std::log1p(-uniform01());
    }

    // Poisson by Knuth's product-of-uniforms method.  Fine for the count
    // scales used here; the guard keeps exp(-mean) away from underflow.
    int poisson(double mean) {
        if (mean < 0.0)
            throw std::invalid_argument("poisson: mean must be non-negative");
        if (mean > 700.0)
            throw std::invalid_argument("poisson: mean too large for this sampler");
        if (mean == 0.0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double product = uniform01();
        while (product > limit) {
            ++k;
            product *= uniform01();
        }
        return k;
    }

    // Index in [0, n) from the cumulative weights of a discrete law.
    template <typename Container>
    int discrete(const Container& probabilities) {
        double u = uniform01();
        double cumulative = 0.0;
        int last = -1;
        for (double p : probabilities) {
            ++last;
            cumulative += p;
            if (u < cumulative) return last;
        }
        return last;  // u fell in rounding slack past the final edge
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace heraldsim
