#pragma once

// Acceptance gate: eight numbered end-to-end criteria covering the noise
// mixture law, the pair-state triple, channel gating endpoints, the
// precession and dephasing fits, readout calibration, exact pulse
// populations, and the structural property suite.  Each criterion prints
// a single PASS/FAIL line; the exit code of the driver is the number of
// failures.  One sub-check (readout curve monotonicity) fails by design:
// with dark counts accumulating over the counting window, discrimination
// fidelity peaks at a finite duration and then falls, so a monotone curve
// is not achievable and the line reports the violation honestly.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "heraldsim/scenario.hpp"

namespace heraldsim {

struct CriterionResult {
    int index = 0;
    std::string name;
    std::string detail;
    bool pass = false;
    double seconds = 0.0;
    double budget_seconds = 0.0;  // 0 means no runtime bound
};

namespace detail {

class SubChecks {
public:
    void band(const std::string& label, double measured, double target, double tol) {
        note(label, fmt(measured) + " vs " + fmt(target) + " +/- " + fmt(tol),
             std::abs(measured - target) <= tol);
    }
    void near(const std::string& label, double measured, double target, double eps) {
        note(label, fmt(measured, 17) + " vs " + fmt(target, 17),
             std::abs(measured - target) <= eps);
    }
    void flag(const std::string& label, bool ok, const std::string& text) {
        note(label, text, ok);
    }

    bool all_ok() const { return all_ok_; }
    const std::string& text() const { return text_; }

private:
    void note(const std::string& label, const std::string& body, bool ok) {
        if (!text_.empty()) text_ += "; ";
        text_ += label + " " + body + (ok ? "" : " [violated]");
        all_ok_ = all_ok_ && ok;
    }
    std::string text_;
    bool all_ok_ = true;
};

template <typename Body>
CriterionResult timed_criterion(int index, const std::string& name, double budget_seconds,
                                Body&& body) {
    CriterionResult cr;
    cr.index = index;
    cr.name = name;
    cr.budget_seconds = budget_seconds;
    const auto start = std::chrono::steady_clock::now();
    SubChecks checks;
    body(checks);
    cr.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    cr.detail = checks.text();
    cr.pass = checks.all_ok();
    if (budget_seconds > 0.0 && cr.seconds >= budget_seconds) {
        cr.pass = false;
        cr.detail += "; runtime " + fmt(cr.seconds) + " s exceeds " +
                     fmt(budget_seconds) + " s [violated]";
    }
    return cr;
}

// F estimated from sampled x/x, y/y, z/z correlators, trials split three ways.
inline double sampled_fidelity(const DensityMatrix& rho, std::uint64_t trials,
                               RandomStream& rng) {
    const std::uint64_t per = trials / 3;
    const Interval exx =
        sampled_correlator(measure_prob(rho, MeasurementBasis::x(), MeasurementBasis::x()),
                           per, rng);
    const Interval eyy =
        sampled_correlator(measure_prob(rho, MeasurementBasis::y(), MeasurementBasis::y()),
                           per, rng);
    const Interval ezz =
        sampled_correlator(measure_prob(rho, MeasurementBasis::z(), MeasurementBasis::z()),
                           trials - 2 * per, rng);
    return (1.0 + exx.estimate + eyy.estimate - ezz.estimate) / 4.0;
}

// Exact counts table for a state whose per-basis laws scale to integers.
inline CountsTable exact_counts(const DensityMatrix& rho, int shots) {
    CountsTable table;
    table.shots_per_basis = shots;
    for (const auto& [pb, ab] : all_pauli_pairs()) {
        CountsTable::Setting s;
        s.photon = pb;
        s.atom = ab;
        const std::array<double, 4> law =
            measure_prob(rho, basis_for(pb), basis_for(ab));
        for (std::size_t k = 0; k < 4; ++k)
            s.counts[k] = static_cast<std::uint64_t>(std::llround(law[k] * shots));
        table.settings.push_back(s);
    }
    return table;
}

inline double max_entry_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    double worst = 0.0;
    for (int r = 0; r < a.dim(); ++r)
        for (int c = 0; c < a.dim(); ++c)
            worst = std::max(worst, std::abs(a(r, c) - b(r, c)));
    return worst;
}

}  // namespace detail

// Run all eight acceptance criteria.  Scratch output (determinism probe)
// goes under out_dir, which is wiped first.
inline std::vector<CriterionResult> run_acceptance(
    std::uint64_t seed = 20260822,
    const std::filesystem::path& out_dir = "acceptance_out") {
    using detail::fmt;
    std::filesystem::remove_all(out_dir);
    std::vector<CriterionResult> results;

    results.push_back(detail::timed_criterion(
        1, "noise mixture law, MC vs p*F0 + (1-p)/4", 10.0, [&](detail::SubChecks& c) {
            RandomStream rng(stream_seed(seed, "acceptance_mixture", 0));
            constexpr std::uint64_t trials = 100000;
            double worst = 0.0;
            for (double f0 : {0.87, 1.0}) {
                const double w0 = (4.0 * f0 - 1.0) / 3.0;
                for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                    const DensityMatrix rho = werner_state(p * w0);
                    const double mc = detail::sampled_fidelity(rho, trials, rng);
                    const double analytic = p * f0 + (1.0 - p) / 4.0;
                    worst = std::max(worst, std::abs(mc - analytic));
                }
            }
            c.flag("largest |MC - analytic| over 10 mixtures at 1e5 trials",
                   worst <= 0.02, fmt(worst) + " vs bound 0.02");
        }));

    results.push_back(detail::timed_criterion(
        2, "pair fidelities and heralding gain", 60.0, [&](detail::SubChecks& c) {
            const SourceParams sp;
            TomographySettings ts;
            ts.shots_per_basis = 10000;
            ts.seed = stream_seed(seed, "acceptance_tomo", 0);
            const CountsTable counts_h =
                simulate_counts(branch_state(Branch::heralded_pair, sp), ts, MeasureChain::ideal);
            ts.seed = stream_seed(seed, "acceptance_tomo", 1);
            const CountsTable counts_a = simulate_counts(qubit_event_state(sp), ts, MeasureChain::ideal);
            const FidelityEstimate est_h =
                fidelity_with_bell(counts_h, 200, stream_seed(seed, "acceptance_tomo", 2));
            const FidelityEstimate est_a =
                fidelity_with_bell(counts_a, 200, stream_seed(seed, "acceptance_tomo", 3));
            c.band("heralded fidelity", est_h.estimate, 0.87, 0.02);
            c.band("all-qubit fidelity", est_a.estimate, 0.65, 0.02);

            RandomStream rng(stream_seed(seed, "acceptance_gain", 0));
            std::vector<EmissionEvent> events;
            events.reserve(1000000);
            for (int i = 0; i < 1000000; ++i) events.push_back(sample_attempt(sp, rng));
            const EfficiencyEstimates eff = estimate_efficiencies(events);
            c.band("efficiency gain at 1e6 attempts",
                   eff.eta_q_given_h.estimate / eff.eta_q.estimate, 1.58, 0.05);
        }));

    results.push_back(detail::timed_criterion(
        3, "gated-channel endpoints and gating dominance", 60.0,
        [&](detail::SubChecks& c) {
            const SourceParams sp;
            const ChannelParams fixed = fixed_gate_defaults(sp);
            const ChannelParams referenced = herald_referenced_defaults();
            const double nu_star =
                calibrated_noise_rate_hz(sp, fixed, 0.48, sp.f_heralded);
            const DensityMatrix rho = branch_state(Branch::heralded_pair, sp);

            ChannelParams fixed_star = fixed;
            fixed_star.noise_rate_hz = nu_star;
            ChannelParams referenced_star = referenced;
            referenced_star.noise_rate_hz = nu_star;
            RandomStream rng(stream_seed(seed, "acceptance_channel", 0));
            const Interval mc_fixed = mc_gated_fidelity(rho, sp, fixed_star, 100000, rng);
            const Interval mc_referenced =
                mc_gated_fidelity(rho, sp, referenced_star, 100000, rng);
            c.band("fixed-gate fidelity at calibrated noise", mc_fixed.estimate, 0.48,
                   0.03);
            c.band("herald-referenced fidelity there", mc_referenced.estimate, 0.75, 0.03);

            double worst_margin = 1.0;
            for (int k = 0; k <= 60; ++k) {
                const double nu = std::pow(10.0, -0.5 + 10.5 * k / 60.0);
                ChannelParams f = fixed, r = referenced;
                f.noise_rate_hz = nu;
                r.noise_rate_hz = nu;
                const double ff = bell_fidelity_with_noise(
                    signal_fraction(gate_capture_probability(sp, f), f), sp.f_heralded);
                const double fr = bell_fidelity_with_noise(
                    signal_fraction(gate_capture_probability(sp, r), r), sp.f_heralded);
                worst_margin = std::min(worst_margin, fr - ff);
            }
            c.flag("referenced curve dominates for all noise rates", worst_margin >= -1e-12,
                   "smallest margin " + fmt(worst_margin) + " over 61 rates");
        }));

    results.push_back(detail::timed_criterion(
        4, "fitted precession period", 30.0, [&](detail::SubChecks& c) {
            const SourceParams sp;
            const DecoherenceParams dp;
            const DensityMatrix initial = branch_state(Branch::heralded_pair, sp);
            std::vector<double> times, correlators;
            for (double t = 0.0; t <= 12.5 + 1e-9; t += 0.25) times.push_back(t);
            for (std::size_t i = 0; i < times.size(); ++i) {
                RandomStream rng(stream_seed(seed, "acceptance_precession", i));
                const DensityMatrix evolved = evolve_storage(initial, times[i], dp);
                correlators.push_back(
                    detail::sampled_correlator(
                        measure_prob(evolved, MeasurementBasis::x(), MeasurementBasis::x()),
                        10000, rng)
                        .estimate);
            }
            const OscillationFit fit = fit_oscillation(times, correlators);
            c.band("oscillation period (us) at 1e4 trials/point", fit.period, 5.0, 0.1);
        }));

    results.push_back(detail::timed_criterion(
        5, "fitted storage dephasing time", 30.0, [&](detail::SubChecks& c) {
            const SourceParams sp;
            const DecoherenceParams dp;
            const DensityMatrix initial = branch_state(Branch::heralded_pair, sp);
            std::vector<double> delays, fidelities;
            for (double t = 0.0; t <= 400.0 + 1e-9; t += 20.0) delays.push_back(t);
            for (std::size_t i = 0; i < delays.size(); ++i) {
                RandomStream rng(stream_seed(seed, "acceptance_delay", i));
                const double t = delays[i];
                const DensityMatrix evolved = evolve_storage(initial, t, dp);
                const Interval exx = detail::sampled_correlator(
                    measure_prob(evolved, MeasurementBasis::x(),
                                 compensated_atom_basis(t, dp, 0.0)),
                    2000, rng);
                const Interval eyy = detail::sampled_correlator(
                    measure_prob(evolved, MeasurementBasis::y(),
                                 compensated_atom_basis(t, dp, std::numbers::pi / 2.0)),
                    2000, rng);
                const Interval ezz = detail::sampled_correlator(
                    measure_prob(evolved, MeasurementBasis::z(), MeasurementBasis::z()),
                    2000, rng);
                fidelities.push_back(
                    (1.0 + exx.estimate + eyy.estimate - ezz.estimate) / 4.0);
            }
            const GaussianDecayFit fit = fit_gaussian_decay(delays, fidelities);
            c.band("Gaussian decay time (us) from the 0-400 us scan", fit.tau, 206.0,
                   10.0);
        }));

    results.push_back(detail::timed_criterion(
        6, "readout calibration triple", 10.0, [&](detail::SubChecks& c) {
            const ReadoutParams rp;
            c.band("discrimination fidelity at the reference duration",
                   readout_fidelity(rp), 0.990, 0.003);

            RandomStream rng(stream_seed(seed, "acceptance_readout", 0));
            constexpr std::uint64_t trials = 20000;
            double sum = 0.0;
            for (std::uint64_t i = 0; i < trials; ++i)
                sum += fluorescence_counts(Hyperfine::F2, rp, rng);
            c.band("bright histogram mean", sum / static_cast<double>(trials), 20.0, 0.5);

            double worst_drop = 0.0, at = 0.0;
            double previous = readout_fidelity(rp.with_duration(0.5));
            for (double d = 1.0; d <= 10.0 + 1e-9; d += 0.5) {
                const double f = readout_fidelity(rp.with_duration(d));
                if (f - previous < worst_drop) {
                    worst_drop = f - previous;
                    at = d;
                }
                previous = f;
            }
            c.flag("fidelity-vs-duration curve monotone increasing", worst_drop >= -1e-12,
                   "largest decrement " + fmt(worst_drop) + " entering " + fmt(at) +
                       " us; dark counts scale with duration, so the curve peaks near "
                       "3.5 us and then falls");
        }));

    results.push_back(detail::timed_criterion(
        7, "exact pulse populations", 0.0, [&](detail::SubChecks& c) {
            const ReadoutChain chain;
            c.near("population at the first-transition pi point",
                   rabi_population(chain.pi_transfer.pi_time_us(), chain.pi_transfer),
                   chain.pi_transfer.contrast, 1e-12);
            c.near("population at the second-transition pi/2 point",
                   rabi_population(chain.basis_pulse.pi_time_us() / 2.0, chain.basis_pulse),
                   chain.basis_pulse.contrast / 2.0, 1e-12);
        }));

    results.push_back(detail::timed_criterion(
        8, "structural property suite", 0.0, [&](detail::SubChecks& c) {
            // density-matrix invariants across representative produced states
            const SourceParams sp;
            const DecoherenceParams dp;
            std::vector<DensityMatrix> battery;
            for (double w : {0.0, 0.25, 0.5, 0.75, 1.0}) battery.push_back(werner_state(w));
            battery.push_back(branch_state(Branch::heralded_pair, sp));
            battery.push_back(branch_state(Branch::qubit_only, sp));
            battery.push_back(qubit_event_state(sp));
            for (double t : {0.0, 2.5, 115.0, 400.0})
                battery.push_back(
                    evolve_storage(branch_state(Branch::heralded_pair, sp), t, dp));
            {
                TomographySettings ts;
                ts.shots_per_basis = 500;
                ts.seed = stream_seed(seed, "acceptance_props", 0);
                battery.push_back(
                    project_physical(linear_inversion(simulate_counts(werner_state(0.8), ts, MeasureChain::ideal))));
            }
            double worst_trace = 0.0, worst_herm = 0.0, worst_eig = 0.0;
            for (const DensityMatrix& rho : battery) {
                worst_trace =
                    std::max(worst_trace, std::abs(rho.matrix().trace().real() - 1.0));
                worst_herm = std::max(worst_herm, rho.matrix().hermiticity_error());
                worst_eig = std::min(worst_eig, min_eigenvalue(rho.matrix()));
            }
            c.flag("density-matrix invariants over " + std::to_string(battery.size()) +
                       " produced states",
                   worst_trace <= 1e-9 && worst_herm <= 1e-9 && worst_eig >= -1e-10,
                   "trace error " + fmt(worst_trace) + ", hermiticity " + fmt(worst_herm) +
                       ", min eigenvalue " + fmt(worst_eig));

            // both reduced states of the Bell pair are maximally mixed
            const DensityMatrix bell = density_of(bell_state());
            const double ptrace_err = std::max(
                detail::max_entry_diff(partial_trace(bell, Subsystem::photon).matrix(),
                                       DensityMatrix::maximally_mixed(2).matrix()),
                detail::max_entry_diff(partial_trace(bell, Subsystem::atom).matrix(),
                                       DensityMatrix::maximally_mixed(2).matrix()));
            c.flag("reduced Bell states are I/2", ptrace_err <= 1e-12,
                   "largest entry deviation " + fmt(ptrace_err));

            // reconstruction from exact outcome distributions is exact
            double roundtrip = 0.0;
            for (const DensityMatrix& truth : {density_of(bell_state()), werner_state(0.8)})
                roundtrip = std::max(
                    roundtrip,
                    detail::max_entry_diff(
                        project_physical(linear_inversion(detail::exact_counts(truth, 10000)))
                            .matrix(),
                        truth.matrix()));
            c.flag("tomography round-trip on true distributions", roundtrip <= 1e-12,
                   "largest entry deviation " + fmt(roundtrip));

            // reconstruction error scales as shots^(-1/2)
            const DensityMatrix truth = werner_state(0.8);
            std::vector<double> log_shots, log_err;
            for (int level = 0; level < 4; ++level) {
                const int shots = 100 * static_cast<int>(std::pow(10.0, level));
                double mean_dist = 0.0;
                for (std::uint64_t rep = 0; rep < 3; ++rep) {
                    TomographySettings ts;
                    ts.shots_per_basis = shots;
                    ts.seed = stream_seed(seed, "acceptance_slope",
                                          static_cast<std::uint64_t>(level) * 8 + rep);
                    mean_dist += trace_distance(
                        project_physical(linear_inversion(simulate_counts(truth, ts, MeasureChain::ideal))),
                        truth);
                }
                log_shots.push_back(std::log(static_cast<double>(shots)));
                log_err.push_back(std::log(mean_dist / 3.0));
            }
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const double n = static_cast<double>(log_shots.size());
            for (std::size_t i = 0; i < log_shots.size(); ++i) {
                sx += log_shots[i];
                sy += log_err[i];
                sxx += log_shots[i] * log_shots[i];
                sxy += log_shots[i] * log_err[i];
            }
            const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            c.band("reconstruction error scaling slope", slope, -0.5, 0.1);

            // projecting a projected state changes nothing
            double idempotence = 0.0;
            for (std::uint64_t rep = 0; rep < 5; ++rep) {
                TomographySettings ts;
                ts.shots_per_basis = 200;
                ts.seed = stream_seed(seed, "acceptance_idem", rep);
                const DensityMatrix once = project_physical(
                    linear_inversion(simulate_counts(werner_state(0.99), ts, MeasureChain::ideal)));
                idempotence = std::max(
                    idempotence,
                    detail::max_entry_diff(project_physical(once.matrix()).matrix(),
                                           once.matrix()));
            }
            c.flag("physical projection is idempotent", idempotence <= 1e-12,
                   "largest entry change on re-projection " + fmt(idempotence));

            // identical seeds give byte-identical scenario output
            ScenarioConfig run_a;
            run_a.scenario = "appx_rabi";
            run_a.seed = seed;
            run_a.trials = 200;
            run_a.output_dir = out_dir / "determinism_a";
            ScenarioConfig run_b = run_a;
            run_b.output_dir = out_dir / "determinism_b";
            run_b.threads = 1;
            run_scenario(run_a);
            run_scenario(run_b);
            bool identical = true;
            for (const char* name : {"results.csv", "rabi_curves.csv"}) {
                std::ifstream a(run_a.output_dir / "appx_rabi" / name, std::ios::binary);
                std::ifstream b(run_b.output_dir / "appx_rabi" / name, std::ios::binary);
                std::ostringstream sa, sb;
                sa << a.rdbuf();
                sb << b.rdbuf();
                identical = identical && a && b && sa.str() == sb.str() &&
                            !sa.str().empty();
            }
            c.flag("fixed-seed runs are byte-identical", identical,
                   "results.csv and rabi_curves.csv compared across two runs");
        }));

    return results;
}

// Print one line per criterion; returns the number of failures.
inline int print_acceptance(std::ostream& out, const std::vector<CriterionResult>& results) {
    int failures = 0;
    for (const CriterionResult& cr : results) {
        out << (cr.pass ? "[PASS] " : "[FAIL] ") << "criterion " << cr.index << ", "
            << cr.name << ": " << cr.detail << " (" << detail::fmt(cr.seconds, 3)
            << " s)\n";
        if (!cr.pass) ++failures;
    }
    out << (failures == 0 ? "acceptance: all criteria passed"
                          : "acceptance: " + std::to_string(failures) +
                                " criterion(s) failed")
        << "\n";
    return failures;
}

}  // namespace heraldsim
