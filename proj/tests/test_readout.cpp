#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "heraldsim/readout.hpp"

using namespace heraldsim;
using Catch::Approx;

TEST_CASE("rabi population closed form", "[readout]") {
    const RabiParams pi_pulse{0.31415926535897931, 0.95, Transition::i_up};
    REQUIRE(rabi_population(0.0, pi_pulse) == Approx(0.0).margin(1e-15));
    REQUIRE(rabi_population(pi_pulse.pi_time_us(), pi_pulse) ==
            Approx(0.95).epsilon(1e-12));
    REQUIRE(rabi_population(pi_pulse.pi_time_us() / 2.0, pi_pulse) ==
            Approx(0.475).epsilon(1e-12));

    const RabiParams half_pulse{0.31415926535897931, 0.96, Transition::i_down};
    REQUIRE(rabi_population(half_pulse.pi_time_us() / 2.0, half_pulse) ==
            Approx(0.48).epsilon(1e-12));

    REQUIRE_THROWS_AS(rabi_population(-1.0, pi_pulse), std::invalid_argument);
    RabiParams bad = pi_pulse;
    bad.contrast = 1.5;
    REQUIRE_THROWS_AS(rabi_population(1.0, bad), std::invalid_argument);
}

TEST_CASE("fluorescence counting statistics", "[readout]") {
    const ReadoutParams rp;
    rp.validate();
    REQUIRE(rp.bright_mean() == Approx(20.0).epsilon(1e-12));
    REQUIRE(rp.dark_mean() == Approx(0.2).epsilon(1e-12));

    RandomStream rng(808);
    double bright_sum = 0.0, dark_sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        bright_sum += fluorescence_counts(Hyperfine::F2, rp, rng);
        dark_sum += fluorescence_counts(Hyperfine::F1, rp, rng);
    }
    REQUIRE(bright_sum / n == Approx(20.0).margin(3.0 * std::sqrt(20.0 / n)));
    REQUIRE(dark_sum / n == Approx(0.2).margin(3.0 * std::sqrt(0.2 / n)));
}

TEST_CASE("threshold discrimination", "[readout]") {
    const ReadoutParams rp;
    REQUIRE(discriminate(0, rp) == Hyperfine::F1);
    REQUIRE(discriminate(1, rp) == Hyperfine::F1);
    REQUIRE(discriminate(2, rp) == Hyperfine::F2);
    REQUIRE(discriminate(20, rp) == Hyperfine::F2);
    REQUIRE_THROWS_AS(discriminate(-1, rp), std::invalid_argument);
}

TEST_CASE("misclassification rates from Poisson tails", "[readout]") {
    const ReadoutParams rp;
    const MisclassificationRates r = misclassification_rates(rp);
    // frozen: 1 - e^{-0.2}(1 + 0.2) and P(Poisson(20) < 2)
    REQUIRE(r.f1_to_f2 == Approx(0.017523096306421793).epsilon(1e-12));
    REQUIRE(r.f2_to_f1 == Approx(4.3284226071209714e-08).epsilon(1e-9));
    REQUIRE(readout_fidelity(rp) == Approx(0.9912384302046762).epsilon(1e-12));

    SECTION("sampled rates agree with the closed form") {
        RandomStream rng(4711);
        int dark_high = 0, bright_low = 0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            dark_high += discriminate(fluorescence_counts(Hyperfine::F1, rp, rng), rp) ==
                         Hyperfine::F2;
            bright_low += discriminate(fluorescence_counts(Hyperfine::F2, rp, rng), rp) ==
                          Hyperfine::F1;
        }
        const double sigma = std::sqrt(r.f1_to_f2 * (1 - r.f1_to_f2) / n);
        REQUIRE(static_cast<double>(dark_high) / n ==
                Approx(r.f1_to_f2).margin(3.0 * sigma));
        REQUIRE(bright_low <= 1);  // expected count 0.004
    }
}

TEST_CASE("readout fidelity versus duration", "[readout]") {
    const ReadoutParams rp;
    const std::vector<double> durations{0.001, 3.0, 7.5};
    const auto fs = readout_fidelity_vs_duration(durations, rp);
    REQUIRE(fs[0] == Approx(0.5).margin(1e-4));  // threshold never reached
    // frozen: Poisson tails at lambda_B = 8, lambda_D = 0.08
    REQUIRE(fs[1] == Approx(0.9969732452232221).epsilon(1e-12));
    REQUIRE(fs[2] == Approx(0.9912384302046762).epsilon(1e-12));

    // the model rises steeply while the bright tail saturates and then
    // drifts down as the scaled dark background grows
    REQUIRE(readout_fidelity(rp.with_duration(1.0)) <
            readout_fidelity(rp.with_duration(2.0)));
    REQUIRE(readout_fidelity(rp.with_duration(2.0)) <
            readout_fidelity(rp.with_duration(3.0)));
    REQUIRE(readout_fidelity(rp.with_duration(3.5)) >
            readout_fidelity(rp.with_duration(7.5)));
}

TEST_CASE("optional heating hook reduces the bright mean", "[readout]") {
    ReadoutParams rp;
    rp.heating_tau_us = 10.0;
    // frozen: (20/7.5) * 10 * (1 - e^{-0.75})
    REQUIRE(rp.bright_mean() == Approx(14.070225260239607).epsilon(1e-12));
    REQUIRE(rp.bright_mean() < 20.0);
    REQUIRE(rp.with_duration(3.0).bright_mean() < rp.bright_mean());
}

TEST_CASE("microwave rotation channel", "[readout]") {
    const PureState up(2, {complex_t(1.0), complex_t(0.0), complex_t(0.0), complex_t(0.0)});
    const DensityMatrix rho_up = density_of(up);

    SECTION("identity at theta 0 without error") {
        const DensityMatrix out = mw_rotation(rho_up, 0.0, 0.0, 0.0);
        REQUIRE(out.entry(0, 0).real() == Approx(1.0).epsilon(1e-14));
    }
    SECTION("pi pulse with depolarizing error transfers 0.975") {
        const DensityMatrix out = mw_rotation(rho_up, std::numbers::pi, 0.0, 0.05);
        REQUIRE(out.entry(1, 1).real() == Approx(0.975).epsilon(1e-12));
    }
    SECTION("error rate 1 yields the maximally mixed atom") {
        const DensityMatrix out = mw_rotation(rho_up, 1.3, 0.4, 1.0);
        REQUIRE(out.entry(0, 0).real() == Approx(0.5).epsilon(1e-12));
        const DensityMatrix pair = density_of(bell_state());
        const DensityMatrix out4 = mw_rotation(pair, 1.3, 0.4, 1.0);
        REQUIRE(fidelity(out4, bell_state()) == Approx(0.25).epsilon(1e-12));
    }
    SECTION("zero error preserves purity") {
        for (double theta : {0.3, 1.1, 2.8})
            REQUIRE(purity(mw_rotation(rho_up, theta, 0.7, 0.0)) ==
                    Approx(1.0).epsilon(1e-12));
    }
    SECTION("error rate out of range") {
        REQUIRE_THROWS_AS(mw_rotation(rho_up, 1.0, 0.0, 1.2), std::invalid_argument);
        REQUIRE_THROWS_AS(mw_rotation(rho_up, 1.0, 0.0, -0.1), std::invalid_argument);
    }
}

TEST_CASE("analytic chain probability on reference inputs", "[readout]") {
    const ReadoutChain chain;
    const PureState up(2, {complex_t(1.0), complex_t(0.0), complex_t(0.0), complex_t(0.0)});

    // frozen: 0.975 * P(dark <= 1) + 0.025 * P(bright < 2)
    REQUIRE(atom_plus_probability(density_of(up), MeasurementBasis::z(), chain) ==
            Approx(0.9579149821833444).epsilon(1e-12));
    // frozen: maximally mixed input ends at 0.5 before counting asymmetry
    REQUIRE(atom_plus_probability(DensityMatrix::maximally_mixed(2),
                                  MeasurementBasis::x(), chain) ==
            Approx(0.4912384734889021).epsilon(1e-12));
    // the pair state is accepted and reduced to the atom
    REQUIRE(atom_plus_probability(density_of(bell_state()), MeasurementBasis::z(), chain) ==
            Approx(0.4912384734889021).epsilon(1e-12));
}

TEST_CASE("sampled outcomes match the analytic chain", "[readout]") {
    const ReadoutChain chain;
    RandomStream state_rng(2718);
    for (int rep = 0; rep < 12; ++rep) {
        // random pure atomic state and random basis
        const double a = state_rng.uniform01(), b = state_rng.uniform01();
        const double th = std::acos(2.0 * a - 1.0), ph = 2.0 * std::numbers::pi * b;
        const PureState psi(
            2, {complex_t(std::cos(th / 2.0)),
                std::sin(th / 2.0) * std::exp(complex_t(0.0, ph)), complex_t(0.0),
                complex_t(0.0)});
        const MeasurementBasis basis =
            rep % 3 == 0 ? MeasurementBasis::z()
                         : MeasurementBasis{std::numbers::pi / 2.0,
                                            2.0 * std::numbers::pi * state_rng.uniform01()};
        const DensityMatrix rho = density_of(psi);
        const double want = atom_plus_probability(rho, basis, chain);
        RandomStream rng(stream_seed(31337, "chain", static_cast<std::uint64_t>(rep)));
        int ups = 0;
        const int n = 6000;
        for (int i = 0; i < n; ++i)
            ups += atom_measurement(rho, basis, chain, rng) == AtomOutcome::up;
        const double sigma = std::sqrt(want * (1.0 - want) / n);
        REQUIRE(static_cast<double>(ups) / n == Approx(want).margin(4.0 * sigma + 1e-4));
    }
}

TEST_CASE("composite error attribution flag", "[readout]") {
    ReadoutChain chain;
    REQUIRE(chain.pi_error() == Approx(0.05).epsilon(1e-12));
    REQUIRE(chain.basis_error() == Approx(0.04).epsilon(1e-12));
    chain.full_error_on_mw = false;
    // frozen: 1 - contrast / f_detection(7.5 us)
    REQUIRE(chain.pi_error() == Approx(0.04160293724302144).epsilon(1e-9));
    REQUIRE(chain.basis_error() == Approx(0.03151454710873747).epsilon(1e-9));
}

TEST_CASE("readout parameter validation", "[readout]") {
    ReadoutParams rp;
    rp.threshold = 0;
    REQUIRE_THROWS_AS(rp.validate(), std::invalid_argument);
    ReadoutParams rp2;
    rp2.duration_us = 0.0;
    REQUIRE_THROWS_AS(rp2.validate(), std::invalid_argument);
    ReadoutParams rp3;
    rp3.bright_rate_per_us = -1.0;
    REQUIRE_THROWS_AS(rp3.validate(), std::invalid_argument);
}
