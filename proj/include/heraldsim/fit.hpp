#pragma once

// Least-squares curve fits for the sweep outputs: a free-period cosine
// for precession data and a Gaussian decay with floor for storage scans.
// Both reduce to a 1-d search over the nonlinear parameter with an exact
// linear subproblem at each candidate.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace heraldsim {

struct OscillationFit {
    double period = 0.0;
    double amplitude = 0.0;  // >= 0
    double phase = 0.0;      // model: offset + amplitude*cos(2*pi*t/period + phase)
    double offset = 0.0;
    double rms_residual = 0.0;
    bool degenerate = false;  // amplitude indistinguishable from the noise floor
};

struct GaussianDecayFit {
    double tau = 0.0;
    double amplitude = 0.0;
    double floor = 0.0;  // model: floor + amplitude*exp(-(t/tau)^2)
    double rms_residual = 0.0;
    bool degenerate = false;  // no resolvable decay amplitude
};

namespace detail {

// Solve the symmetric 3x3 normal equations by Gaussian elimination with
// partial pivoting; returns false on a (near-)singular system.
inline bool solve3(std::array<std::array<double, 4>, 3>& aug, std::array<double, 3>& x) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(aug[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
                std::abs(aug[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]))
                pivot = r;
        std::swap(aug[static_cast<std::size_t>(col)], aug[static_cast<std::size_t>(pivot)]);
        const double head = aug[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
        if (std::abs(head) < 1e-300) return false;
        for (int r = col + 1; r < 3; ++r) {
            const double f =
                aug[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] / head;
            for (int c = col; c < 4; ++c)
                aug[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
                    f * aug[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double acc = aug[static_cast<std::size_t>(r)][3];
        for (int c = r + 1; c < 3; ++c)
            acc -= aug[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] *
                   x[static_cast<std::size_t>(c)];
        x[static_cast<std::size_t>(r)] =
            acc / aug[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)];
    }
    return true;
}

// Best (a, b, c) for y ~ a*cos(w t) + b*sin(w t) + c at fixed angular
// frequency; returns the sum of squared residuals.
inline double cosine_subproblem(std::span<const double> t, std::span<const double> y,
                                double omega, std::array<double, 3>& coef) {
    double scc = 0.0, scs = 0.0, sc = 0.0, sss = 0.0, ss = 0.0;
    double syc = 0.0, sys = 0.0, sy = 0.0;
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double c = std::cos(omega * t[i]);
        const double s = std::sin(omega * t[i]);
        scc += c * c;
        scs += c * s;
        sc += c;
        sss += s * s;
        ss += s;
        syc += y[i] * c;
        sys += y[i] * s;
        sy += y[i];
    }
    std::array<std::array<double, 4>, 3> aug{{{scc, scs, sc, syc},
                                              {scs, sss, ss, sys},
                                              {sc, ss, static_cast<double>(n), sy}}};
    if (!solve3(aug, coef)) return std::numeric_limits<double>::infinity();
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double model = coef[0] * std::cos(omega * t[i]) +
                             coef[1] * std::sin(omega * t[i]) + coef[2];
        const double r = y[i] - model;
        sse += r * r;
    }
    return sse;
}

// Best (a, floor) for y ~ a*exp(-(t/tau)^2) + floor at fixed tau; returns
// the sum of squared residuals, or infinity when the system is singular.
inline double decay_subproblem(std::span<const double> t, std::span<const double> y,
                               double tau, double& amplitude, double& floor_out) {
    double sdd = 0.0, sd = 0.0, syd = 0.0, sy = 0.0;
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::exp(-(t[i] / tau) * (t[i] / tau));
        sdd += d * d;
        sd += d;
        syd += y[i] * d;
        sy += y[i];
    }
    const double det = sdd * static_cast<double>(n) - sd * sd;
    if (std::abs(det) < 1e-14 * (sdd * static_cast<double>(n) + 1.0))
        return std::numeric_limits<double>::infinity();
    amplitude = (syd * static_cast<double>(n) - sy * sd) / det;
    floor_out = (sdd * sy - sd * syd) / det;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::exp(-(t[i] / tau) * (t[i] / tau));
        const double r = y[i] - (amplitude * d + floor_out);
        sse += r * r;
    }
    return sse;
}

// Golden-section minimisation of f over [lo, hi].
template <typename F>
double golden_minimise(F&& f, double lo, double hi, int iterations) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iterations; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

inline void check_fit_input(std::span<const double> t, std::span<const double> y,
                            std::size_t minimum, const char* name) {
    if (t.size() != y.size())
        throw std::invalid_argument(std::string(name) + ": size mismatch");
    if (t.size() < minimum)
        throw std::invalid_argument(std::string(name) + ": need at least " +
                                    std::to_string(minimum) + " points");
}

}  // namespace detail

// Free-period cosine fit via a logarithmic period grid plus golden-section
// refinement; the linear coefficients are solved exactly per candidate.
inline OscillationFit fit_oscillation(std::span<const double> t, std::span<const double> y) {
    detail::check_fit_input(t, y, 8, "fit_oscillation");
    const auto [tmin_it, tmax_it] = std::minmax_element(t.begin(), t.end());
    const double span = *tmax_it - *tmin_it;
    if (span <= 0.0)
        throw std::invalid_argument("fit_oscillation: zero time span");
    double min_gap = span;
    {
        std::vector<double> sorted(t.begin(), t.end());
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            const double gap = sorted[i] - sorted[i - 1];
            if (gap > 0.0) min_gap = std::min(min_gap, gap);
        }
    }
    const double period_lo = std::max(2.5 * min_gap, span * 1e-3);
    const double period_hi = 2.0 * span;

    const auto sse_at = [&](double period) {
        std::array<double, 3> coef{};
        return detail::cosine_subproblem(t, y, 2.0 * std::numbers::pi / period, coef);
    };
    const int grid = 600;
    double best_period = period_lo;
    double best_sse = std::numeric_limits<double>::infinity();
    const double ratio = std::pow(period_hi / period_lo, 1.0 / (grid - 1));
    double period = period_lo;
    for (int i = 0; i < grid; ++i, period *= ratio) {
        const double sse = sse_at(period);
        if (sse < best_sse) {
            best_sse = sse;
            best_period = period;
        }
    }
    const double refined = detail::golden_minimise(
        sse_at, best_period / ratio, best_period * ratio, 60);

    OscillationFit fit;
    std::array<double, 3> coef{};
    const double sse =
        detail::cosine_subproblem(t, y, 2.0 * std::numbers::pi / refined, coef);
    fit.period = refined;
    fit.amplitude = std::hypot(coef[0], coef[1]);
    fit.phase = std::atan2(-coef[1], coef[0]);
    fit.offset = coef[2];
    fit.rms_residual = std::sqrt(sse / static_cast<double>(t.size()));
    const double noise_floor =
        3.0 * fit.rms_residual * std::sqrt(2.0 / static_cast<double>(t.size()));
    fit.degenerate = fit.amplitude <= std::max(noise_floor, 1e-9 * (std::abs(fit.offset) + 1.0));
    if (!fit.degenerate && fit.period > span)
        throw std::invalid_argument(
            "fit_oscillation: data span below one fitted period");
    return fit;
}

// Gaussian decay with a constant floor, fitted the same way over a decay
// constant grid.
inline GaussianDecayFit fit_gaussian_decay(std::span<const double> t,
                                           std::span<const double> y) {
    detail::check_fit_input(t, y, 6, "fit_gaussian_decay");
    const double span = *std::max_element(t.begin(), t.end());
    if (span <= 0.0)
        throw std::invalid_argument("fit_gaussian_decay: zero time span");
    const double tau_lo = span / 30.0;
    const double tau_hi = span * 30.0;
    const auto sse_at = [&](double tau) {
        double a = 0.0, f0 = 0.0;
        return detail::decay_subproblem(t, y, tau, a, f0);
    };
    const int grid = 400;
    const double ratio = std::pow(tau_hi / tau_lo, 1.0 / (grid - 1));
    double best_tau = tau_lo;
    double best_sse = std::numeric_limits<double>::infinity();
    double tau = tau_lo;
    for (int i = 0; i < grid; ++i, tau *= ratio) {
        const double sse = sse_at(tau);
        if (sse < best_sse) {
            best_sse = sse;
            best_tau = tau;
        }
    }
    if (!std::isfinite(best_sse))
        throw std::runtime_error(
            "fit_gaussian_decay: singular fit (no usable spread in the decay "
            "term); time values may be degenerate");
    const double refined =
        detail::golden_minimise(sse_at, best_tau / ratio, best_tau * ratio, 60);

    GaussianDecayFit fit;
    double amplitude = 0.0, floor_val = 0.0;
    const double sse = detail::decay_subproblem(t, y, refined, amplitude, floor_val);
    fit.tau = refined;
    fit.amplitude = amplitude;
    fit.floor = floor_val;
    fit.rms_residual = std::sqrt(sse / static_cast<double>(t.size()));
    const double noise_floor =
        3.0 * fit.rms_residual * std::sqrt(2.0 / static_cast<double>(t.size()));
    fit.degenerate =
        std::abs(fit.amplitude) <= std::max(noise_floor, 1e-9 * (std::abs(fit.floor) + 1.0));
    return fit;
}

}  // namespace heraldsim
