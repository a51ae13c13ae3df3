#pragma once

// Atomic-qubit measurement chain.  The population of |up> is first
// transferred to the auxiliary dark level by a microwave pi pulse, an
// optional second pulse rotates the requested measurement axis onto z,
// and cavity-enhanced fluorescence then distinguishes the dark (F1) from
// the bright (F2) hyperfine manifold by photon counting.  Pulse
// imperfections are modeled as depolarizing admixtures; counting is
// Poissonian with a threshold discriminator.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "heraldsim/qstate.hpp"
#include "heraldsim/rng.hpp"

namespace heraldsim {

enum class Hyperfine { F1, F2 };  // F1 reads dark, F2 scatters brightly
enum class Transition { i_up, i_down };
enum class AtomOutcome { up, down };

struct RabiParams {
    double omega_rad_per_us = 0.31415926535897931;  // pi pulse at 10 us
    double contrast = 1.0;
    Transition transition = Transition::i_up;

    void validate() const {
        if (!(omega_rad_per_us > 0.0))
            throw std::invalid_argument("RabiParams: omega must be positive");
        if (contrast < 0.0 || contrast > 1.0)
            throw std::invalid_argument("RabiParams: contrast out of range");
    }
    double pi_time_us() const { return std::numbers::pi / omega_rad_per_us; }
};

// Transferred population after driving the transition for a time t.
inline double rabi_population(double t_us, const RabiParams& rp) {
    rp.validate();
    if (t_us < 0.0)
        throw std::invalid_argument("rabi_population: time must be non-negative");
    return 0.5 * rp.contrast * (1.0 - std::cos(rp.omega_rad_per_us * t_us));
}

struct ReadoutParams {
    static constexpr double reference_duration_us = 7.5;

    double bright_rate_per_us = 20.0 / 7.5;  // F2 scattering into the counter
    double dark_mean_at_ref = 0.2;           // F1 background over 7.5 us
    double duration_us = 7.5;
    int threshold = 2;          // counts at or above read as F2
    double heating_tau_us = 0.0;  // optional bright-rate decay; 0 disables

    void validate() const {
        if (bright_rate_per_us < 0.0 || dark_mean_at_ref < 0.0 || heating_tau_us < 0.0)
            throw std::invalid_argument("ReadoutParams: negative rate");
        if (!(duration_us > 0.0))
            throw std::invalid_argument("ReadoutParams: duration must be positive");
        if (threshold < 1)
            throw std::invalid_argument("ReadoutParams: threshold must be at least 1");
    }

    double bright_mean() const {
        if (heating_tau_us > 0.0)
            return bright_rate_per_us * heating_tau_us *
                   (1.0 - std::exp(-duration_us / heating_tau_us));
        return bright_rate_per_us * duration_us;
    }
    double dark_mean() const {
        return dark_mean_at_ref * duration_us / reference_duration_us;
    }

    ReadoutParams with_duration(double d_us) const {
        ReadoutParams p = *this;
        p.duration_us = d_us;
        return p;
    }
};

inline int fluorescence_counts(Hyperfine state, const ReadoutParams& rp,
                               RandomStream& rng) {
    rp.validate();
    return rng.poisson(state == Hyperfine::F2 ? rp.bright_mean() : rp.dark_mean());
}

inline Hyperfine discriminate(int counts, const ReadoutParams& rp) {
    if (counts < 0) throw std::invalid_argument("discriminate: negative counts");
    return counts >= rp.threshold ? Hyperfine::F2 : Hyperfine::F1;
}

// P(X <= k) for X ~ Poisson(lambda), by direct summation.
inline double poisson_cdf(int k, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("poisson_cdf: negative mean");
    if (k < 0) return 0.0;
    double term = std::exp(-lambda), sum = term;
    for (int i = 1; i <= k; ++i) {
        term *= lambda / i;
        sum += term;
    }
    return std::min(1.0, sum);
}

struct MisclassificationRates {
    double f1_to_f2 = 0.0;  // dark state read as bright
    double f2_to_f1 = 0.0;  // bright state read as dark
};

inline MisclassificationRates misclassification_rates(const ReadoutParams& rp) {
    rp.validate();
    MisclassificationRates r;
    r.f1_to_f2 = 1.0 - poisson_cdf(rp.threshold - 1, rp.dark_mean());
    r.f2_to_f1 = poisson_cdf(rp.threshold - 1, rp.bright_mean());
    return r;
}

// Average of the two correct-classification probabilities.
inline double readout_fidelity(const ReadoutParams& rp) {
    const MisclassificationRates r = misclassification_rates(rp);
    return 0.5 * ((1.0 - r.f1_to_f2) + (1.0 - r.f2_to_f1));
}

inline std::vector<double> readout_fidelity_vs_duration(
    const std::vector<double>& durations_us, const ReadoutParams& rp) {
    std::vector<double> out;
    out.reserve(durations_us.size());
    for (double d : durations_us) out.push_back(readout_fidelity(rp.with_duration(d)));
    return out;
}

// Bloch rotation by theta about the equatorial axis at azimuth phi:
// exp(-i theta (cos(phi) X + sin(phi) Y)/2).
inline ComplexMatrix rotation_unitary(double theta, double phi) {
    ComplexMatrix u(2);
    const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
    u(0, 0) = c;
    u(1, 1) = c;
    u(0, 1) = complex_t(0.0, -s) * std::exp(complex_t(0.0, -phi));
    u(1, 0) = complex_t(0.0, -s) * std::exp(complex_t(0.0, phi));
    return u;
}

// Microwave rotation with a depolarizing imperfection: the ideal rotation
// with probability 1-error_rate, the atomic qubit replaced by I/2
// otherwise.  Accepts the bare atomic qubit or the full pair state.
inline DensityMatrix mw_rotation(const DensityMatrix& rho, double theta, double phi,
                                 double error_rate) {
    if (error_rate < 0.0 || error_rate > 1.0)
        throw std::invalid_argument("mw_rotation: error rate out of range");
    const ComplexMatrix u = rotation_unitary(theta, phi);
    ComplexMatrix rotated(rho.dim());
    ComplexMatrix depol(rho.dim());
    ComplexMatrix half = ComplexMatrix::identity(2);
    half *= complex_t(0.5);
    if (rho.dim() == 2) {
        rotated = u * rho.matrix() * u.adjoint();
        depol = half;
    } else {
        const ComplexMatrix u4 = kron(ComplexMatrix::identity(2), u);
        rotated = u4 * rho.matrix() * u4.adjoint();
        depol = kron(partial_trace_raw(rho.matrix(), Subsystem::photon), half);
    }
    rotated *= complex_t(1.0 - error_rate);
    depol *= complex_t(error_rate);
    rotated += depol;
    // scrub rounding asymmetry from the two matrix products
    ComplexMatrix sym = rotated;
    sym += rotated.adjoint();
    sym *= complex_t(0.5);
    return DensityMatrix(std::move(sym));
}

// The full measurement chain configuration.  The quoted pulse fidelities
// include state-detection imperfections; by default the whole quoted
// error budget is attributed to the microwave step (full_error_on_mw),
// otherwise the depolarizing weight is reduced so that pulse plus
// counting reproduce the quoted figure at the reference duration.
struct ReadoutChain {
    RabiParams pi_transfer{0.31415926535897931, 0.95, Transition::i_up};
    RabiParams basis_pulse{0.31415926535897931, 0.96, Transition::i_down};
    ReadoutParams detection;
    bool full_error_on_mw = true;

    void validate() const {
        pi_transfer.validate();
        basis_pulse.validate();
        detection.validate();
    }

    double pi_error() const { return effective_error(pi_transfer.contrast); }
    double basis_error() const { return effective_error(basis_pulse.contrast); }

private:
    double effective_error(double contrast) const {
        if (full_error_on_mw) return 1.0 - contrast;
        const double f_det = readout_fidelity(detection.with_duration(
            ReadoutParams::reference_duration_us));
        const double e = 1.0 - std::min(1.0, contrast / f_det);
        return std::max(0.0, e);
    }
};

namespace detail {

// Atomic state after the pulse sequence that maps the measurement axis
// onto z.  The P(up) diagonal entry is the probability that the atom ends
// in the dark manifold, i.e. carries the "+" outcome of the axis.
inline DensityMatrix atom_state_before_counting(const DensityMatrix& rho,
                                                const MeasurementBasis& basis,
                                                const ReadoutChain& chain) {
    chain.validate();
    DensityMatrix atom =
        rho.dim() == 4 ? partial_trace(rho, Subsystem::atom) : rho;
    // pi transfer: no net rotation in the effective two-level picture,
    // but it carries its depolarizing error
    atom = mw_rotation(atom, 0.0, 0.0, chain.pi_error());
    // basis alignment: z needs no pulse; any other axis is rotated onto z
    if (std::abs(basis.theta) > 1e-12)
        atom = mw_rotation(atom, -basis.theta, basis.phi + std::numbers::pi / 2.0,
                           chain.basis_error());
    return atom;
}

}  // namespace detail

// Probability that the measurement chain reports the "+" outcome of the
// given axis, fully analytic (used as the oracle for the sampler).
inline double atom_plus_probability(const DensityMatrix& rho,
                                    const MeasurementBasis& basis,
                                    const ReadoutChain& chain) {
    const DensityMatrix atom = detail::atom_state_before_counting(rho, basis, chain);
    const double p_up = atom.entry(0, 0).real();
    const MisclassificationRates r = misclassification_rates(chain.detection);
    // up ends dark (F1): read correctly with 1 - f1_to_f2;
    // down ends bright (F2): misread as F1 with f2_to_f1
    return p_up * (1.0 - r.f1_to_f2) + (1.0 - p_up) * r.f2_to_f1;
}

// One sampled measurement: pulse chain, fluorescence counting, threshold
// discrimination.  F1 maps to the "+"/up-type outcome per the level
// scheme, F2 to the "-"/down-type outcome.
inline AtomOutcome atom_measurement(const DensityMatrix& rho,
                                    const MeasurementBasis& basis,
                                    const ReadoutChain& chain, RandomStream& rng) {
    const DensityMatrix atom = detail::atom_state_before_counting(rho, basis, chain);
    const double p_up = atom.entry(0, 0).real();
    const bool up = rng.bernoulli(detail::clamp_probability(p_up, "atom_measurement"));
    const int counts =
        fluorescence_counts(up ? Hyperfine::F1 : Hyperfine::F2, chain.detection, rng);
    return discriminate(counts, chain.detection) == Hyperfine::F1 ? AtomOutcome::up
                                                                  : AtomOutcome::down;
}

}  // namespace heraldsim
