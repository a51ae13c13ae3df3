#pragma once

// Model of the heralded entangled-pair source.  Each excitation attempt
// emits (with some probability) a herald photon followed by the
// polarisation qubit photon; detecting the herald announces the pair.
// Attempts branch four ways depending on which photons are detected, and
// each branch that carries a photonic qubit is assigned a white-noise
// mixture of the ideal pair state whose weight reproduces the calibrated
// fidelity for that branch.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "heraldsim/qstate.hpp"
#include "heraldsim/rng.hpp"
#include "heraldsim/stats.hpp"

namespace heraldsim {

struct SourceParams {
    double eta_q = 0.43;          // qubit-photon efficiency per attempt
    double eta_h = 0.34;          // herald detection efficiency per attempt
    double eta_q_given_h = 0.68;  // qubit-photon efficiency given a herald
    double f_heralded = 0.87;     // pair fidelity of heralded events
    double f_all = 0.65;          // pair fidelity over all qubit-photon events
    double f_nonresonant = 0.29;  // pair fidelity with the herald path detuned
    double tau_herald_ns = 50.0;  // herald wavepacket decay constant
    double tau_delay_ns = 30.0;   // qubit-photon delay constant after the herald

    double p_heralded_pair() const { return eta_h * eta_q_given_h; }
    double p_herald_only() const { return eta_h * (1.0 - eta_q_given_h); }
    double p_qubit_only() const { return eta_q - p_heralded_pair(); }
    double p_none() const { return 1.0 - eta_h - p_qubit_only(); }

    void validate() const {
        for (double p : {eta_q, eta_h, eta_q_given_h, f_heralded, f_all, f_nonresonant})
            if (p < 0.0 || p > 1.0)
                throw std::invalid_argument("SourceParams: probabilities must be in [0,1]");
        if (p_qubit_only() < 0.0)
            throw std::invalid_argument(
                "SourceParams: eta_q must be at least eta_h * eta_q_given_h");
        if (p_none() < 0.0)
            throw std::invalid_argument("SourceParams: branch probabilities exceed 1");
        if (!(tau_herald_ns > 0.0) || !(tau_delay_ns > 0.0))
            throw std::invalid_argument("SourceParams: decay constants must be positive");
        if (f_heralded <= 0.25)
            throw std::invalid_argument("SourceParams: heralded fidelity below random");
        unheralded_weight();  // throws if f_all is inconsistent with f_heralded
    }

    // Fidelity of the qubit-only branch, found by removing the heralded
    // contribution from the all-events average.
    double unheralded_fidelity() const {
        if (p_qubit_only() <= 0.0)
            throw std::invalid_argument("SourceParams: no unheralded branch");
        return (eta_q * f_all - p_heralded_pair() * f_heralded) / p_qubit_only();
    }

    double heralded_weight() const { return noise_weight_for_fidelity(f_heralded, 1.0); }
    double unheralded_weight() const {
        return noise_weight_for_fidelity(unheralded_fidelity(), 1.0);
    }
    double nonresonant_weight() const {
        return noise_weight_for_fidelity(f_nonresonant, 1.0);
    }
};

enum class Branch { heralded_pair, herald_only, qubit_only, none };

// One excitation attempt.  Detection times are in nanoseconds from the
// attempt trigger; NaN when the corresponding photon was not detected.
struct EmissionEvent {
    Branch branch = Branch::none;
    bool herald_detected = false;
    bool qubit_detected = false;
    double t_herald_ns = std::numeric_limits<double>::quiet_NaN();
    double t_qubit_ns = std::numeric_limits<double>::quiet_NaN();
};

// Draw one attempt: branch first, then arrival times.  The herald
// emission happens whether or not that photon is detected, so the qubit
// photon always arrives a herald time plus a delay after the trigger.
inline EmissionEvent sample_attempt(const SourceParams& sp, RandomStream& rng) {
    EmissionEvent ev;
    const double u = rng.uniform01();
    const double p1 = sp.p_heralded_pair();
    const double p2 = p1 + sp.p_herald_only();
    const double p3 = p2 + sp.p_qubit_only();
    if (u < p1)
        ev.branch = Branch::heralded_pair;
    else if (u < p2)
        ev.branch = Branch::herald_only;
    else if (u < p3)
        ev.branch = Branch::qubit_only;
    else
        ev.branch = Branch::none;

    ev.herald_detected =
        ev.branch == Branch::heralded_pair || ev.branch == Branch::herald_only;
    ev.qubit_detected =
        ev.branch == Branch::heralded_pair || ev.branch == Branch::qubit_only;

    if (ev.branch == Branch::none) return ev;
    const double t_h = rng.exponential(sp.tau_herald_ns);
    if (ev.herald_detected) ev.t_herald_ns = t_h;
    if (ev.qubit_detected) ev.t_qubit_ns = t_h + rng.exponential(sp.tau_delay_ns);
    return ev;
}

// Pair state assigned to a branch that carries the photonic qubit.
inline DensityMatrix branch_state(Branch branch, const SourceParams& sp) {
    switch (branch) {
        case Branch::heralded_pair:
            return werner_state(sp.heralded_weight());
        case Branch::qubit_only:
            return werner_state(sp.unheralded_weight());
        default:
            throw std::invalid_argument("branch_state: branch carries no photonic qubit");
    }
}

// Average state over all attempts that deliver a qubit photon; its
// fidelity reproduces f_all by construction.
inline DensityMatrix qubit_event_state(const SourceParams& sp) {
    const double w_h = sp.p_heralded_pair() / sp.eta_q;
    ComplexMatrix m = branch_state(Branch::heralded_pair, sp).matrix();
    m *= complex_t(w_h);
    ComplexMatrix u = branch_state(Branch::qubit_only, sp).matrix();
    u *= complex_t(1.0 - w_h);
    m += u;
    return DensityMatrix(std::move(m));
}

// State produced with the herald path detuned (no heralding available).
inline DensityMatrix nonresonant_state(const SourceParams& sp) {
    return werner_state(sp.nonresonant_weight());
}

// Survival function of the herald arrival time.
inline double herald_survival(double t_ns, const SourceParams& sp) {
    return t_ns <= 0.0 ? 1.0 : std::exp(-t_ns / sp.tau_herald_ns);
}

// Survival function of the qubit-photon arrival time, the sum of the two
// exponential stages (equal decay constants handled as the Erlang limit).
inline double qubit_time_survival(double t_ns, const SourceParams& sp) {
    if (t_ns <= 0.0) return 1.0;
    const double th = sp.tau_herald_ns, td = sp.tau_delay_ns;
    if (std::abs(th - td) < 1e-9 * th)
        return std::exp(-t_ns / th) * (1.0 + t_ns / th);
    return (th * std::exp(-t_ns / th) - td * std::exp(-t_ns / td)) / (th - td);
}

// Mode of the qubit-photon arrival-time density.
inline double qubit_time_peak(const SourceParams& sp) {
    const double th = sp.tau_herald_ns, td = sp.tau_delay_ns;
    if (std::abs(th - td) < 1e-9 * th) return th;
    return std::log(th / td) * th * td / (th - td);
}

// Efficiency estimates with 68% Wilson intervals from an event stream.
struct EfficiencyEstimates {
    Interval eta_q;
    Interval eta_h;
    Interval eta_q_given_h;
    std::uint64_t attempts = 0;
};

inline EfficiencyEstimates estimate_efficiencies(std::span<const EmissionEvent> events) {
    if (events.empty())
        throw std::invalid_argument("estimate_efficiencies: no events");
    std::uint64_t n_q = 0, n_h = 0, n_qh = 0;
    for (const EmissionEvent& ev : events) {
        n_q += ev.qubit_detected;
        n_h += ev.herald_detected;
        n_qh += ev.herald_detected && ev.qubit_detected;
    }
    if (n_h == 0)
        throw std::invalid_argument("estimate_efficiencies: no heralds in stream");
    EfficiencyEstimates out;
    out.attempts = events.size();
    out.eta_q = wilson_interval(n_q, events.size());
    out.eta_h = wilson_interval(n_h, events.size());
    out.eta_q_given_h = wilson_interval(n_qh, n_h);
    return out;
}

}  // namespace heraldsim
