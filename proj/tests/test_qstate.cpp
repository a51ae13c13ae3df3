#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "heraldsim/qstate.hpp"

using namespace heraldsim;
using Catch::Approx;
using cd = std::complex<double>;

namespace {

// Independent brute-force oracle for joint measurement probabilities:
// builds the projectors from scratch with plain arrays and contracts
// against the density matrix entry by entry.
std::array<double, 4> oracle_measure_prob(const DensityMatrix& rho,
                                          double tp, double pp_,
                                          double ta, double pa) {
    auto proj1 = [](double theta, double phi, int sign) {
        std::array<std::array<cd, 2>, 2> p{};
        const double s = static_cast<double>(sign);
        p[0][0] = 0.5 * (1.0 + s * std::cos(theta));
        p[1][1] = 0.5 * (1.0 - s * std::cos(theta));
        p[0][1] = 0.5 * s * std::sin(theta) * std::exp(cd(0.0, -phi));
        p[1][0] = 0.5 * s * std::sin(theta) * std::exp(cd(0.0, phi));
        return p;
    };
    std::array<double, 4> out{};
    int k = 0;
    for (int sp : {+1, -1})
        for (int sa : {+1, -1}) {
            const auto P = proj1(tp, pp_, sp);
            const auto A = proj1(ta, pa, sa);
            // tr[(P (x) A) rho] with joint index 2p + a
            cd tr = 0.0;
            for (int pr = 0; pr < 2; ++pr)
                for (int ar = 0; ar < 2; ++ar)
                    for (int pc = 0; pc < 2; ++pc)
                        for (int ac = 0; ac < 2; ++ac)
                            tr += P[static_cast<std::size_t>(pr)][static_cast<std::size_t>(pc)] *
                                  A[static_cast<std::size_t>(ar)][static_cast<std::size_t>(ac)] *
                                  rho.entry(2 * pc + ac, 2 * pr + ar);
            out[static_cast<std::size_t>(k++)] = tr.real();
        }
    return out;
}

PureState plus_state() {
    const double r = 1.0 / std::numbers::sqrt2;
    return PureState(2, {cd(r), cd(r), cd(0.0), cd(0.0)});
}

}  // namespace

TEST_CASE("ideal pair state amplitudes", "[qstate]") {
    const PureState psi = bell_state();
    const double r = 1.0 / std::numbers::sqrt2;
    REQUIRE(psi.dim() == 4);
    REQUIRE(std::abs(psi.amplitude(0)) == Approx(0.0).margin(1e-15));
    REQUIRE(psi.amplitude(1).real() == Approx(r).epsilon(1e-15));
    REQUIRE(psi.amplitude(2).real() == Approx(r).epsilon(1e-15));
    REQUIRE(std::abs(psi.amplitude(3)) == Approx(0.0).margin(1e-15));
}

TEST_CASE("density matrix invariants are enforced on construction", "[qstate]") {
    SECTION("pure state is valid with unit purity") {
        const DensityMatrix rho = density_of(bell_state());
        REQUIRE(rho.matrix().trace().real() == Approx(1.0).epsilon(1e-14));
        REQUIRE(purity(rho) == Approx(1.0).epsilon(1e-12));
        REQUIRE(fidelity(rho, bell_state()) == Approx(1.0).epsilon(1e-12));
    }
    SECTION("non-Hermitian input is rejected") {
        ComplexMatrix m = ComplexMatrix::identity(2);
        m *= cd(0.5);
        m(0, 1) = cd(0.1, 0.0);  // no matching conjugate below the diagonal
        REQUIRE_THROWS_AS(DensityMatrix(m), std::invalid_argument);
    }
    SECTION("wrong trace is rejected") {
        ComplexMatrix m = ComplexMatrix::identity(2);
        REQUIRE_THROWS_AS(DensityMatrix(m), std::invalid_argument);
    }
    SECTION("indefinite matrix is rejected") {
        ComplexMatrix m(2);
        m(0, 0) = 1.5;
        m(1, 1) = -0.5;
        REQUIRE_THROWS_AS(DensityMatrix(m), std::invalid_argument);
    }
    SECTION("unnormalised pure state is rejected") {
        REQUIRE_THROWS_AS(PureState(2, {cd(1.0), cd(1.0), cd(0.0), cd(0.0)}),
                          std::invalid_argument);
    }
}

TEST_CASE("white-noise mixtures follow the closed-form fidelity", "[qstate]") {
    SECTION("frozen example p = 0.8267") {
        const DensityMatrix w = werner_state(0.8267);
        REQUIRE(fidelity(w, bell_state()) == Approx(0.870025).epsilon(1e-9));
    }
    SECTION("closed form agrees with the operator construction on a grid") {
        for (double p : {0.0, 0.19219315895372233, 0.5333333333333333, 0.8266666666666667, 1.0}) {
            const DensityMatrix w = werner_state(p);
            REQUIRE(fidelity(w, bell_state()) ==
                    Approx(bell_fidelity_with_noise(p, 1.0)).epsilon(1e-12));
        }
    }
    SECTION("frozen arithmetic example") {
        REQUIRE(bell_fidelity_with_noise(0.371, 0.87) == Approx(0.48002).epsilon(1e-12));
    }
    SECTION("inverse map round-trips") {
        const double p = noise_weight_for_fidelity(0.48002, 0.87);
        REQUIRE(p == Approx(0.371).epsilon(1e-12));
        REQUIRE_THROWS_AS(noise_weight_for_fidelity(0.9, 0.2), std::invalid_argument);
        REQUIRE_THROWS_AS(noise_weight_for_fidelity(0.99, 0.5), std::invalid_argument);
    }
    SECTION("noise keeps the atomic marginal") {
        // product state |R> (x) |up>: atom marginal must survive the mixing
        const PureState prod(4, {cd(1.0), cd(0.0), cd(0.0), cd(0.0)});
        const DensityMatrix noisy = add_photon_white_noise(density_of(prod), 0.3);
        const DensityMatrix atom = partial_trace(noisy, Subsystem::atom);
        REQUIRE(atom.entry(0, 0).real() == Approx(1.0).epsilon(1e-12));
        const DensityMatrix photon = partial_trace(noisy, Subsystem::photon);
        REQUIRE(photon.entry(0, 0).real() == Approx(0.3 + 0.7 * 0.5).epsilon(1e-12));
    }
}

TEST_CASE("partial trace of the ideal pair is maximally mixed", "[qstate]") {
    const DensityMatrix rho = density_of(bell_state());
    for (Subsystem s : {Subsystem::photon, Subsystem::atom}) {
        const DensityMatrix red = partial_trace(rho, s);
        REQUIRE(red.entry(0, 0).real() == Approx(0.5).epsilon(1e-12));
        REQUIRE(red.entry(1, 1).real() == Approx(0.5).epsilon(1e-12));
        REQUIRE(std::abs(red.entry(0, 1)) == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("measurement bases produce the Pauli operators", "[qstate]") {
    auto same = [](const ComplexMatrix& a, const ComplexMatrix& b) {
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                if (std::abs(a(r, c) - b(r, c)) > 1e-14) return false;
        return true;
    };
    REQUIRE(same(MeasurementBasis::x().axis_operator(), pauli_x()));
    REQUIRE(same(MeasurementBasis::y().axis_operator(), pauli_y()));
    REQUIRE(same(MeasurementBasis::z().axis_operator(), pauli_z()));

    const MeasurementBasis b{0.8, 2.1};
    const ComplexMatrix p = b.projector(+1);
    const ComplexMatrix m = b.projector(-1);
    REQUIRE((p + m).hermiticity_error() == Approx(0.0).margin(1e-15));
    REQUIRE(std::abs((p + m)(0, 0) - cd(1.0)) < 1e-14);   // P+ + P- = I
    REQUIRE(std::abs((p * p - p)(0, 1)) < 1e-14);          // idempotent
    REQUIRE(std::abs((p * m)(0, 0)) < 1e-14);              // orthogonal
}

TEST_CASE("joint measurement probabilities on the ideal pair", "[qstate]") {
    const DensityMatrix rho = density_of(bell_state());

    SECTION("photon x, atom x: perfectly correlated") {
        const auto p = measure_prob(rho, MeasurementBasis::x(), MeasurementBasis::x());
        REQUIRE(p[0] == Approx(0.5).epsilon(1e-12));
        REQUIRE(p[1] == Approx(0.0).margin(1e-12));
        REQUIRE(p[2] == Approx(0.0).margin(1e-12));
        REQUIRE(p[3] == Approx(0.5).epsilon(1e-12));
    }
    SECTION("photon y, atom y: perfectly correlated") {
        const auto p = measure_prob(rho, MeasurementBasis::y(), MeasurementBasis::y());
        REQUIRE(p[0] + p[3] == Approx(1.0).epsilon(1e-12));
        REQUIRE(p[0] == Approx(0.5).epsilon(1e-12));
    }
    SECTION("photon z, atom z: perfectly anticorrelated") {
        const auto p = measure_prob(rho, MeasurementBasis::z(), MeasurementBasis::z());
        REQUIRE(p[0] == Approx(0.0).margin(1e-12));
        REQUIRE(p[1] == Approx(0.5).epsilon(1e-12));
        REQUIRE(p[2] == Approx(0.5).epsilon(1e-12));
        REQUIRE(p[3] == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("measure_prob agrees with the brute-force oracle", "[qstate]") {
    const DensityMatrix w = werner_state(0.73);
    const struct { double tp, pp, ta, pa; } cases[] = {
        {0.7, 1.1, 2.0, -0.4},
        {std::numbers::pi / 2, 0.0, std::numbers::pi / 2, 0.9},
        {0.0, 0.0, 1.3, 2.7},
        {2.9, -2.2, 0.4, 0.0},
    };
    for (const auto& c : cases) {
        const auto got = measure_prob(w, MeasurementBasis{c.tp, c.pp},
                                      MeasurementBasis{c.ta, c.pa});
        const auto want = oracle_measure_prob(w, c.tp, c.pp, c.ta, c.pa);
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) {
            REQUIRE(got[static_cast<std::size_t>(k)] ==
                    Approx(want[static_cast<std::size_t>(k)]).margin(1e-12));
            sum += got[static_cast<std::size_t>(k)];
        }
        REQUIRE(sum == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("single-qubit probabilities follow the Bloch overlap", "[qstate]") {
    // state (|up> + e^{i 0.9}|down>)/sqrt2 measured along azimuth 0.3:
    // p(+) = cos^2((0.9-0.3)/2)
    const double r = 1.0 / std::numbers::sqrt2;
    const PureState psi(2, {cd(r), r * std::exp(cd(0.0, 0.9)), cd(0.0), cd(0.0)});
    const auto p = measure_prob_single(density_of(psi), MeasurementBasis::equatorial(0.3));
    const double want = std::cos(0.3) * std::cos(0.3);
    REQUIRE(p[0] == Approx(want).epsilon(1e-12));
    REQUIRE(p[0] + p[1] == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("photon collapse yields the right conditional atom state", "[qstate]") {
    const DensityMatrix rho = density_of(bell_state());

    SECTION("photon measured R along z leaves the atom in |down>") {
        const auto [prob, atom] = conditional_atom_state(rho, MeasurementBasis::z(), +1);
        REQUIRE(prob == Approx(0.5).epsilon(1e-12));
        REQUIRE(atom.entry(1, 1).real() == Approx(1.0).epsilon(1e-12));
    }
    SECTION("photon measured + along x leaves the atom in |+x>") {
        const auto [prob, atom] = conditional_atom_state(rho, MeasurementBasis::x(), +1);
        REQUIRE(prob == Approx(0.5).epsilon(1e-12));
        REQUIRE(fidelity(atom, plus_state()) == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("hermitian eigensystem with known spectrum", "[qstate]") {
    // werner_state(0.6) has eigenvalues (1+3p)/4 = 0.7 and (1-p)/4 = 0.1 (x3)
    const auto es = hermitian_eigensystem(werner_state(0.6).matrix());
    REQUIRE(es.values[0] == Approx(0.1).epsilon(1e-10));
    REQUIRE(es.values[1] == Approx(0.1).epsilon(1e-10));
    REQUIRE(es.values[2] == Approx(0.1).epsilon(1e-10));
    REQUIRE(es.values[3] == Approx(0.7).epsilon(1e-10));

    // eigenvector of the top eigenvalue is the ideal pair state itself
    cd overlap = 0.0;
    const PureState psi = bell_state();
    for (int i = 0; i < 4; ++i) overlap += std::conj(psi.amplitude(i)) * es.vectors(i, 3);
    REQUIRE(std::abs(overlap) == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("maximally mixed state properties", "[qstate]") {
    const DensityMatrix mm = DensityMatrix::maximally_mixed(4);
    REQUIRE(purity(mm) == Approx(0.25).epsilon(1e-12));
    REQUIRE(fidelity(mm, bell_state()) == Approx(0.25).epsilon(1e-12));
}

TEST_CASE("dimension mismatches are rejected", "[qstate]") {
    const DensityMatrix rho2 = DensityMatrix::maximally_mixed(2);
    REQUIRE_THROWS_AS(measure_prob(rho2, MeasurementBasis::x(), MeasurementBasis::x()),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(partial_trace(rho2, Subsystem::atom), std::invalid_argument);
    REQUIRE_THROWS_AS(fidelity(rho2, bell_state()), std::invalid_argument);
    REQUIRE_THROWS_AS(kron(ComplexMatrix::identity(4), ComplexMatrix::identity(2)),
                      std::invalid_argument);
}
