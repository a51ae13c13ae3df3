#pragma once

// Small statistics helpers shared by the estimators: binomial interval,
// correlator with propagated uncertainty, sample moments.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace heraldsim {

// Point estimate with a (lo, hi) confidence interval.
struct Interval {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;

    double half_width() const { return 0.5 * (hi - lo); }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// Wilson score interval for a binomial proportion.  z defaults to one
// standard error (68% coverage), matching how the sweep CSVs report MC
// uncertainties.  Stays inside [0,1] even for 0 or n successes.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                double z = 1.0) {
    if (trials == 0)
        throw std::invalid_argument("wilson_interval: trials must be positive");
    if (successes > trials)
        throw std::invalid_argument("wilson_interval: successes exceed trials");
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (phat + z2 / (2.0 * n)) / denom;
    const double half =
        (z / denom) * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    return {phat, centre - half, centre + half};
}

// Correlation parameter E = (n_pp + n_mm - n_pm - n_mp) / n with the
// standard error sqrt((1 - E^2)/n) propagated from multinomial counts.
inline Interval correlator_interval(std::uint64_t n_pp, std::uint64_t n_pm,
                                    std::uint64_t n_mp, std::uint64_t n_mm,
                                    double z = 1.0) {
    const std::uint64_t n = n_pp + n_pm + n_mp + n_mm;
    if (n == 0)
        throw std::invalid_argument("correlator_interval: no counts");
    const double total = static_cast<double>(n);
    const double e =
        (static_cast<double>(n_pp) + static_cast<double>(n_mm) -
         static_cast<double>(n_pm) - static_cast<double>(n_mp)) / total;
    const double se = std::sqrt(std::max(0.0, 1.0 - e * e) / total);
    return {e, e - z * se, e + z * se};
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Unbiased sample standard deviation.
inline double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("sample_std: need >= 2 points");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace heraldsim
