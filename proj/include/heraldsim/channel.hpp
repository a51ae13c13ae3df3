#pragma once

// Photonic channel and detector model: fiber attenuation, Poissonian
// detector noise, and the temporal gate that accepts qubit-photon counts
// either in a fixed window after the sequence trigger or in a window
// referenced to the herald detection time.  The signal fraction p of
// accepted counts that stem from the real photon drives the mixture
// fidelity p*F0 + (1-p)/4.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "heraldsim/decoherence.hpp"
#include "heraldsim/qstate.hpp"
#include "heraldsim/rng.hpp"
#include "heraldsim/source.hpp"
#include "heraldsim/stats.hpp"

namespace heraldsim {

struct ChannelParams {
    double attenuation_db_per_km = 0.2;
    double length_km = 0.0;
    double noise_rate_hz = 10.0;     // detector noise; 10 Hz is the reference point
    double gate_width_ns = 400.0;
    bool herald_referenced = false;
    double gate_offset_ns = 0.0;     // gate center, from trigger or from t_herald

    void validate() const {
        if (attenuation_db_per_km < 0.0 || length_km < 0.0 || noise_rate_hz < 0.0)
            throw std::invalid_argument("ChannelParams: negative parameter");
        if (!(gate_width_ns > 0.0))
            throw std::invalid_argument("ChannelParams: gate width must be positive");
    }

    double gate_start_ns() const { return gate_offset_ns - gate_width_ns / 2.0; }
    double gate_end_ns() const { return gate_offset_ns + gate_width_ns / 2.0; }

    // Expected noise counts in one gate.
    double noise_mean() const { return noise_rate_hz * gate_width_ns * 1e-9; }
};

// Fixed-mode defaults: a 400 ns gate centered on the peak of the marginal
// qubit-photon arrival-time density.
inline ChannelParams fixed_gate_defaults(const SourceParams& sp,
                                         double gate_width_ns = 400.0) {
    ChannelParams cp;
    cp.gate_width_ns = gate_width_ns;
    cp.herald_referenced = false;
    cp.gate_offset_ns = qubit_time_peak(sp);
    return cp;
}

// Herald-referenced defaults: a 40 ns gate starting at the herald click.
inline ChannelParams herald_referenced_defaults(double gate_width_ns = 40.0) {
    ChannelParams cp;
    cp.gate_width_ns = gate_width_ns;
    cp.herald_referenced = true;
    cp.gate_offset_ns = gate_width_ns / 2.0;
    return cp;
}

// Fiber transmission 10^(-attenuation*length/10).
inline double transmission(const ChannelParams& cp) {
    return std::pow(10.0, -cp.attenuation_db_per_km * cp.length_km / 10.0);
}

// Probability that the qubit photon of an emission lands inside the gate
// (before fiber loss).  Fixed mode integrates the two-stage arrival law;
// referenced mode integrates the exponential delay after the herald.
inline double gate_capture_probability(const SourceParams& sp, const ChannelParams& cp) {
    const double a = cp.gate_start_ns(), b = cp.gate_end_ns();
    if (cp.herald_referenced) {
        const double lo = std::max(0.0, a), hi = std::max(0.0, b);
        return std::exp(-lo / sp.tau_delay_ns) - std::exp(-hi / sp.tau_delay_ns);
    }
    return qubit_time_survival(std::max(0.0, a), sp) -
           qubit_time_survival(std::max(0.0, b), sp);
}

// Capture including fiber transmission.
inline double signal_per_event(const SourceParams& sp, const ChannelParams& cp) {
    return gate_capture_probability(sp, cp) * transmission(cp);
}

struct GateDecision {
    bool accepted = false;        // any count fell inside the gate
    bool in_gate_signal = false;  // the real photon was captured
    int noise_counts = 0;
};

// One gate realization for one emission.  Fiber loss is drawn here; the
// herald-referenced window needs the herald timestamp.
inline GateDecision gate_capture(const EmissionEvent& ev, const ChannelParams& cp,
                                 RandomStream& rng) {
    if (cp.herald_referenced && !ev.herald_detected)
        throw std::invalid_argument("gate_capture: herald-referenced gate without herald");
    GateDecision gd;
    if (ev.qubit_detected) {
        const double ref = cp.herald_referenced ? ev.t_herald_ns : 0.0;
        const double t = ev.t_qubit_ns - ref;
        const bool in_window = t >= cp.gate_start_ns() && t <= cp.gate_end_ns();
        gd.in_gate_signal = in_window && rng.bernoulli(transmission(cp));
    }
    gd.noise_counts = rng.poisson(cp.noise_mean());
    gd.accepted = gd.in_gate_signal || gd.noise_counts > 0;
    return gd;
}

// Fraction of accepted counts carrying the real photon: s/(s+n) with
// s the per-event signal probability after loss and n the expected noise
// counts per gate.
inline double signal_fraction(double signal_per_event_prob, const ChannelParams& cp) {
    if (signal_per_event_prob < 0.0 || signal_per_event_prob > 1.0)
        throw std::invalid_argument("signal_fraction: probability out of range");
    const double s = signal_per_event_prob * transmission(cp);
    const double n = cp.noise_mean();
    if (s + n <= 0.0)
        throw std::invalid_argument("signal_fraction: no signal and no noise");
    return s / (s + n);
}

// Fiber length at which the reference channel (10 Hz-class noise) gives
// the same signal-to-noise ratio as a local measurement at noise_rate.
inline double equivalent_distance_km(double noise_rate_hz, const ChannelParams& ref) {
    if (!(noise_rate_hz > 0.0))
        throw std::invalid_argument("equivalent_distance_km: noise rate must be positive");
    if (!(ref.attenuation_db_per_km > 0.0) || !(ref.noise_rate_hz > 0.0))
        throw std::invalid_argument("equivalent_distance_km: invalid reference channel");
    const double L = (10.0 / ref.attenuation_db_per_km) *
                     std::log10(noise_rate_hz / ref.noise_rate_hz);
    return std::max(0.0, L);
}

// Noise rate whose 400 ns-gate count ratio n/s reproduces the ungated
// mixture fidelity endpoint: n/s = (f0 - f)/(f - 1/4).
inline double calibrated_noise_rate_hz(const SourceParams& sp, const ChannelParams& cp,
                                       double target_fidelity, double f0) {
    if (target_fidelity <= 0.25 || target_fidelity >= f0)
        throw std::invalid_argument("calibrated_noise_rate_hz: target out of range");
    const double ratio = (f0 - target_fidelity) / (target_fidelity - 0.25);
    const double s = signal_per_event(sp, cp);
    return ratio * s / (cp.gate_width_ns * 1e-9);
}

// Monte Carlo fidelity of gated events.  Every accepted count enters the
// correlator tally: captured photons are measured on the pair state,
// noise counts give an unpolarized photon outcome with the atom drawn
// from its marginal.  Bases cycle x/x, y/y, z/z over trials and
// F = (1 + E_xx + E_yy - E_zz)/4; the returned interval propagates the
// multinomial correlator errors.
inline Interval mc_gated_fidelity(const DensityMatrix& rho, const SourceParams& sp,
                                  const ChannelParams& cp, std::uint64_t trials,
                                  RandomStream& rng) {
    if (rho.dim() != 4)
        throw std::invalid_argument("mc_gated_fidelity: expects a pair state");
    if (trials == 0)
        throw std::invalid_argument("mc_gated_fidelity: trials must be positive");

    const MeasurementBasis photon_bases[3] = {MeasurementBasis::x(), MeasurementBasis::y(),
                                              MeasurementBasis::z()};
    const MeasurementBasis atom_bases[3] = {MeasurementBasis::x(), MeasurementBasis::y(),
                                            MeasurementBasis::z()};
    // Per-basis outcome laws for signal counts and for noise counts.
    std::array<std::array<double, 4>, 3> signal_probs{};
    std::array<std::array<double, 4>, 3> noise_probs{};
    const DensityMatrix atom_marginal = partial_trace(rho, Subsystem::atom);
    for (int b = 0; b < 3; ++b) {
        signal_probs[static_cast<std::size_t>(b)] =
            measure_prob(rho, photon_bases[b], atom_bases[b]);
        const auto pa = measure_prob_single(atom_marginal, atom_bases[b]);
        noise_probs[static_cast<std::size_t>(b)] = {0.5 * pa[0], 0.5 * pa[1],
                                                    0.5 * pa[0], 0.5 * pa[1]};
    }

    const double capture = signal_per_event(sp, cp);
    const double noise_mean = cp.noise_mean();
    std::array<std::array<std::uint64_t, 4>, 3> counts{};
    for (std::uint64_t i = 0; i < trials; ++i) {
        const int b = static_cast<int>(i % 3);
        auto& tally = counts[static_cast<std::size_t>(b)];
        if (rng.bernoulli(capture))
            ++tally[static_cast<std::size_t>(
                rng.discrete(signal_probs[static_cast<std::size_t>(b)]))];
        for (int k = rng.poisson(noise_mean); k > 0; --k)
            ++tally[static_cast<std::size_t>(
                rng.discrete(noise_probs[static_cast<std::size_t>(b)]))];
    }

    double f = 1.0, var = 0.0;
    const double sign[3] = {+1.0, +1.0, -1.0};
    for (int b = 0; b < 3; ++b) {
        const auto& t = counts[static_cast<std::size_t>(b)];
        const Interval e = correlator_interval(t[0], t[1], t[2], t[3]);
        f += sign[b] * e.estimate;
        const double se = e.hi - e.estimate;
        var += se * se;
    }
    f /= 4.0;
    const double se_f = std::sqrt(var) / 4.0;
    return {f, f - se_f, f + se_f};
}

// One record of the noise sweep, covering both gating modes.
struct NoiseScanPoint {
    double noise_rate_hz = 0.0;
    double equivalent_km = 0.0;
    std::string mode;  // "fixed" or "herald_referenced"
    double gate_ns = 0.0;
    double p = 0.0;                  // signal fraction
    double fidelity_analytic = 0.0;  // Eq.-5-style mixture value
    double fidelity_mc = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Analytic + Monte Carlo fidelity versus noise rate for the two gating
// modes.  The pair state is the heralded branch state of the source.
inline std::vector<NoiseScanPoint> fidelity_vs_noise(
    const std::vector<double>& noise_rates_hz, const SourceParams& sp,
    const std::vector<ChannelParams>& modes, std::uint64_t trials_per_point,
    std::uint64_t master_seed, const std::string& seed_label = "fidelity_vs_noise") {
    sp.validate();
    const DensityMatrix rho = branch_state(Branch::heralded_pair, sp);
    const double f0 = sp.f_heralded;
    ChannelParams reference;  // 10 Hz, 0.2 dB/km
    std::vector<NoiseScanPoint> out;
    std::uint64_t point_index = 0;
    for (const ChannelParams& mode : modes) {
        mode.validate();
        for (double nu : noise_rates_hz) {
            ChannelParams cp = mode;
            cp.noise_rate_hz = nu;
            NoiseScanPoint rec;
            rec.noise_rate_hz = nu;
            rec.equivalent_km = nu > 0.0 ? equivalent_distance_km(nu, reference) : 0.0;
            rec.mode = mode.herald_referenced ? "herald_referenced" : "fixed";
            rec.gate_ns = cp.gate_width_ns;
            rec.p = signal_fraction(gate_capture_probability(sp, cp), cp);
            rec.fidelity_analytic = bell_fidelity_with_noise(rec.p, f0);
            RandomStream rng(stream_seed(master_seed, seed_label, point_index));
            const Interval mc = mc_gated_fidelity(rho, sp, cp, trials_per_point, rng);
            rec.fidelity_mc = mc.estimate;
            rec.ci_low = mc.lo;
            rec.ci_high = mc.hi;
            out.push_back(rec);
            ++point_index;
        }
    }
    return out;
}

}  // namespace heraldsim
