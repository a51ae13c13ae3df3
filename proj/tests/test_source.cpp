#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "heraldsim/source.hpp"

using namespace heraldsim;
using Catch::Approx;

TEST_CASE("branch probabilities at the calibrated efficiencies", "[source]") {
    const SourceParams sp;
    sp.validate();
    // independent arithmetic: 0.34*0.68, 0.34*0.32, 0.43-0.2312, remainder
    REQUIRE(sp.p_heralded_pair() == Approx(0.2312).epsilon(1e-12));
    REQUIRE(sp.p_herald_only() == Approx(0.1088).epsilon(1e-12));
    REQUIRE(sp.p_qubit_only() == Approx(0.1988).epsilon(1e-12));
    REQUIRE(sp.p_none() == Approx(0.4612).epsilon(1e-12));
    REQUIRE(sp.p_heralded_pair() + sp.p_herald_only() + sp.p_qubit_only() +
                sp.p_none() ==
            Approx(1.0).epsilon(1e-14));
}

TEST_CASE("branch fidelities reproduce the calibration targets", "[source]") {
    const SourceParams sp;
    const PureState ideal = bell_state();

    // unheralded branch solves eta_q*f_all = p_hp*f_h + p_qo*f_u
    REQUIRE(sp.unheralded_fidelity() == Approx(0.39414486921529174).epsilon(1e-12));
    REQUIRE(sp.heralded_weight() == Approx(0.82666666666666666).epsilon(1e-12));

    REQUIRE(fidelity(branch_state(Branch::heralded_pair, sp), ideal) ==
            Approx(0.87).epsilon(1e-12));
    REQUIRE(fidelity(branch_state(Branch::qubit_only, sp), ideal) ==
            Approx(sp.unheralded_fidelity()).epsilon(1e-12));
    REQUIRE(fidelity(qubit_event_state(sp), ideal) == Approx(0.65).epsilon(1e-12));
    REQUIRE(fidelity(nonresonant_state(sp), ideal) == Approx(0.29).epsilon(1e-12));

    REQUIRE_THROWS_AS(branch_state(Branch::herald_only, sp), std::invalid_argument);
    REQUIRE_THROWS_AS(branch_state(Branch::none, sp), std::invalid_argument);
}

TEST_CASE("attempt sampling matches the branch law", "[source]") {
    const SourceParams sp;
    RandomStream rng(2024);
    const int n = 300000;
    int counts[4] = {0, 0, 0, 0};
    double sum_th = 0.0, sum_tq = 0.0;
    int n_th = 0, n_tq = 0;
    int qubit_after_herald = 0, heralded_n = 0;
    for (int i = 0; i < n; ++i) {
        const EmissionEvent ev = sample_attempt(sp, rng);
        ++counts[static_cast<int>(ev.branch)];
        // flags must mirror the branch
        REQUIRE(ev.herald_detected == (ev.branch == Branch::heralded_pair ||
                                       ev.branch == Branch::herald_only));
        REQUIRE(ev.qubit_detected == (ev.branch == Branch::heralded_pair ||
                                      ev.branch == Branch::qubit_only));
        REQUIRE(std::isnan(ev.t_herald_ns) == !ev.herald_detected);
        REQUIRE(std::isnan(ev.t_qubit_ns) == !ev.qubit_detected);
        if (ev.herald_detected) {
            sum_th += ev.t_herald_ns;
            ++n_th;
        }
        if (ev.qubit_detected) {
            sum_tq += ev.t_qubit_ns;
            ++n_tq;
        }
        if (ev.branch == Branch::heralded_pair) {
            ++heralded_n;
            qubit_after_herald += (ev.t_qubit_ns > ev.t_herald_ns);
        }
    }
    const double probs[4] = {sp.p_heralded_pair(), sp.p_herald_only(),
                             sp.p_qubit_only(), sp.p_none()};
    for (int b = 0; b < 4; ++b) {
        const double phat = static_cast<double>(counts[b]) / n;
        const double sigma = std::sqrt(probs[b] * (1.0 - probs[b]) / n);
        REQUIRE(phat == Approx(probs[b]).margin(4.0 * sigma));
    }
    // herald times are Exp(50 ns); qubit times add an Exp(30 ns) stage
    REQUIRE(sum_th / n_th == Approx(50.0).margin(1.0));
    REQUIRE(sum_tq / n_tq == Approx(80.0).margin(1.2));
    REQUIRE(qubit_after_herald == heralded_n);
}

TEST_CASE("qubit arrival-time law matches the two-stage model", "[source]") {
    const SourceParams sp;
    // frozen survival values for tau = (50, 30) ns
    REQUIRE(qubit_time_survival(0.0, sp) == Approx(1.0));
    REQUIRE(qubit_time_survival(40.0, sp) == Approx(0.7279267031194637).epsilon(1e-12));
    REQUIRE(qubit_time_survival(100.0, sp) == Approx(0.28482721807065314).epsilon(1e-12));
    REQUIRE(qubit_time_peak(sp) == Approx(38.3119217824493).epsilon(1e-12));
    REQUIRE(qubit_time_survival(qubit_time_peak(sp), sp) ==
            Approx(0.743612802471824).epsilon(1e-12));

    SECTION("equal decay constants fall back to the Erlang form") {
        SourceParams eq = sp;
        eq.tau_delay_ns = 50.0;
        REQUIRE(qubit_time_peak(eq) == Approx(50.0).epsilon(1e-9));
        REQUIRE(qubit_time_survival(50.0, eq) ==
                Approx(2.0 * std::exp(-1.0)).epsilon(1e-9));
    }

    SECTION("sampled tail fraction agrees with the survival function") {
        RandomStream rng(55);
        int tail = 0, total = 0;
        for (int i = 0; i < 200000; ++i) {
            const EmissionEvent ev = sample_attempt(sp, rng);
            if (!ev.qubit_detected) continue;
            ++total;
            tail += (ev.t_qubit_ns > 100.0);
        }
        const double want = qubit_time_survival(100.0, sp);
        const double sigma = std::sqrt(want * (1.0 - want) / total);
        REQUIRE(static_cast<double>(tail) / total == Approx(want).margin(4.0 * sigma));
    }
}

TEST_CASE("efficiency estimation recovers the inputs", "[source]") {
    const SourceParams sp;
    RandomStream rng(99);
    std::vector<EmissionEvent> events;
    events.reserve(200000);
    for (int i = 0; i < 200000; ++i) events.push_back(sample_attempt(sp, rng));
    const EfficiencyEstimates est = estimate_efficiencies(events);
    REQUIRE(est.attempts == events.size());
    REQUIRE(std::abs(est.eta_q.estimate - sp.eta_q) < 4.0 * est.eta_q.half_width());
    REQUIRE(std::abs(est.eta_h.estimate - sp.eta_h) < 4.0 * est.eta_h.half_width());
    REQUIRE(std::abs(est.eta_q_given_h.estimate - sp.eta_q_given_h) <
            4.0 * est.eta_q_given_h.half_width());
    REQUIRE(est.eta_q.half_width() < 0.002);
    REQUIRE_THROWS_AS(estimate_efficiencies(std::vector<EmissionEvent>{}),
                      std::invalid_argument);
}

TEST_CASE("inconsistent source parameters are rejected", "[source]") {
    SECTION("eta_q below the heralded-pair probability") {
        SourceParams sp;
        sp.eta_q = 0.20;  // < 0.34 * 0.68
        REQUIRE_THROWS_AS(sp.validate(), std::invalid_argument);
    }
    SECTION("negative decay constant") {
        SourceParams sp;
        sp.tau_delay_ns = -1.0;
        REQUIRE_THROWS_AS(sp.validate(), std::invalid_argument);
    }
    SECTION("all-events fidelity too low for the heralded branch") {
        SourceParams sp;
        sp.f_all = 0.30;  // would need a below-random unheralded branch
        REQUIRE_THROWS_AS(sp.validate(), std::invalid_argument);
    }
    SECTION("probability outside the unit interval") {
        SourceParams sp;
        sp.eta_h = 1.2;
        REQUIRE_THROWS_AS(sp.validate(), std::invalid_argument);
    }
}
