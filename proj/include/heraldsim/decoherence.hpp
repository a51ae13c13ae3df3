#pragma once

// Evolution of the stored atomic qubit between herald and measurement:
// Larmor precession about the bias field plus Gaussian dephasing from the
// slow magnetic environment.  Readout compensates the deterministic
// precession by advancing the analysis basis azimuth, so what remains is
// the Gaussian coherence envelope.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "heraldsim/qstate.hpp"

namespace heraldsim {

struct DecoherenceParams {
    double larmor_freq_hz = 200e3;  // precession frequency of the spin qubit
    double tau_dephase_us = 206.0;  // 1/e time of the Gaussian envelope

    double larmor_period_us() const { return 1e6 / larmor_freq_hz; }
    double larmor_phase(double t_us) const {
        return 2.0 * std::numbers::pi * larmor_freq_hz * t_us * 1e-6;
    }

    void validate() const {
        if (!(larmor_freq_hz > 0.0))
            throw std::invalid_argument("DecoherenceParams: frequency must be positive");
        if (!(tau_dephase_us > 0.0))
            throw std::invalid_argument("DecoherenceParams: dephasing time must be positive");
    }
};

// Gaussian coherence envelope exp(-(t/tau)^2).
inline double dephasing_factor(double t_us, const DecoherenceParams& dp) {
    const double x = t_us / dp.tau_dephase_us;
    return std::exp(-x * x);
}

namespace detail {

// Apply f to the atom sector of a 2- or 4-dimensional matrix: entries
// couple atom indices (a, b) and f receives them with the photon indices
// fixed.  Used for evolutions that are diagonal in the photon factor.
template <typename F>
ComplexMatrix map_atom_entries(const ComplexMatrix& m, F&& f) {
    ComplexMatrix out = m;
    if (m.dim() == 2) {
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) out(a, b) = f(a, b, m(a, b));
        return out;
    }
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    out(2 * p + a, 2 * q + b) = f(a, b, m(2 * p + a, 2 * q + b));
    return out;
}

}  // namespace detail

// Unitary precession: |down> acquires phase e^{i phi(t)} relative to |up>.
inline DensityMatrix larmor_evolve(const DensityMatrix& rho, double t_us,
                                   const DecoherenceParams& dp) {
    const double phi = dp.larmor_phase(t_us);
    const complex_t up = std::exp(complex_t(0.0, phi));
    const complex_t dn = std::conj(up);
    ComplexMatrix m = detail::map_atom_entries(
        rho.matrix(), [&](int a, int b, complex_t v) {
            if (a == 1 && b == 0) return v * up;
            if (a == 0 && b == 1) return v * dn;
            return v;
        });
    return DensityMatrix(std::move(m));
}

// Gaussian dephasing: atomic coherences shrink by the envelope factor.
inline DensityMatrix gaussian_dephase(const DensityMatrix& rho, double t_us,
                                      const DecoherenceParams& dp) {
    const double d = dephasing_factor(t_us, dp);
    ComplexMatrix m = detail::map_atom_entries(
        rho.matrix(),
        [&](int a, int b, complex_t v) { return a == b ? v : v * d; });
    return DensityMatrix(std::move(m));
}

// Full storage evolution for a delay t; precession and dephasing act on
// the same atomic coherences, so the order does not matter.
inline DensityMatrix evolve_storage(const DensityMatrix& rho, double t_us,
                                    const DecoherenceParams& dp) {
    return gaussian_dephase(larmor_evolve(rho, t_us, dp), t_us, dp);
}

// Analysis basis that tracks the precession: an equatorial axis advanced
// by the accumulated Larmor phase.
inline MeasurementBasis compensated_atom_basis(double t_us, const DecoherenceParams& dp,
                                               double base_azimuth = 0.0) {
    return MeasurementBasis::equatorial(base_azimuth + dp.larmor_phase(t_us));
}

// Correlation parameter E = p(++) + p(--) - p(+-) - p(-+) for the given
// photon and atom axes.
inline double correlation_parameter(const DensityMatrix& rho,
                                    const MeasurementBasis& photon_basis,
                                    const MeasurementBasis& atom_basis) {
    const auto p = measure_prob(rho, photon_basis, atom_basis);
    return p[0] + p[3] - p[1] - p[2];
}

// Photon-atom correlation after a storage time, measured along photon x
// and a fixed or precession-compensated equatorial atom axis.
inline double precession_correlation(const DensityMatrix& initial, double t_us,
                                     const DecoherenceParams& dp, bool compensated) {
    const DensityMatrix evolved = evolve_storage(initial, t_us, dp);
    const MeasurementBasis atom =
        compensated ? compensated_atom_basis(t_us, dp) : MeasurementBasis::x();
    return correlation_parameter(evolved, MeasurementBasis::x(), atom);
}

// Pair fidelity estimated the way the experiment does: three correlators
// with the equatorial atom axes offset by the given azimuth.
// For the target state, E(x,x') = E(y,y') = +1 and E(z,z) = -1, so
// F = (1 + E_xx' + E_yy' - E_zz)/4.
inline double bell_estimator_fidelity(const DensityMatrix& rho,
                                      double atom_azimuth_offset = 0.0) {
    const double exx = correlation_parameter(
        rho, MeasurementBasis::x(), MeasurementBasis::equatorial(atom_azimuth_offset));
    const double eyy = correlation_parameter(
        rho, MeasurementBasis::y(),
        MeasurementBasis::equatorial(atom_azimuth_offset + std::numbers::pi / 2.0));
    const double ezz = correlation_parameter(rho, MeasurementBasis::z(),
                                             MeasurementBasis::z());
    return (1.0 + exx + eyy - ezz) / 4.0;
}

// Closed-form fidelity after a compensated delay for a white-noise
// mixture with clean weight p0: the equatorial correlators shrink by the
// envelope d(t) while the z correlator is untouched.
inline double compensated_fidelity(double t_us, double p0, const DecoherenceParams& dp) {
    if (p0 < 0.0 || p0 > 1.0)
        throw std::invalid_argument("compensated_fidelity: weight out of range");
    const double d = dephasing_factor(t_us, dp);
    return p0 * (1.0 + d) / 2.0 + (1.0 - p0) / 4.0;
}

// Fidelity-versus-delay curve for a state of initial fidelity f0.
inline std::vector<double> fidelity_vs_delay(const std::vector<double>& delays_us,
                                             double f0, const DecoherenceParams& dp) {
    const double p0 = noise_weight_for_fidelity(f0, 1.0);
    std::vector<double> out;
    out.reserve(delays_us.size());
    for (double t : delays_us) out.push_back(compensated_fidelity(t, p0, dp));
    return out;
}

}  // namespace heraldsim
