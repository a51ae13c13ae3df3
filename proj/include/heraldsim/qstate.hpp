#pragma once

// State algebra for an atom-photon qubit pair.
//
// Conventions used throughout the library:
//   * the photon is the first tensor factor, the atom the second;
//   * single-qubit basis order is (|R>, |L>) for the photon polarisation
//     qubit and (|up>, |down>) for the atomic spin qubit;
//   * the joint basis index is 2*p + a, i.e. (R up, R down, L up, L down);
//   * measurement axes are unit vectors on the Bloch sphere given by the
//     polar/azimuthal angles of the "+" outcome.
//
// The ideal source state (|R,down> + |L,up>)/sqrt(2) therefore has the
// amplitude vector (0, 1/sqrt2, 1/sqrt2, 0).

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace heraldsim {

using complex_t = std::complex<double>;

// Validation tolerances for physical states.
inline constexpr double kHermiticityTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
inline constexpr double kEigenvalueFloor = -1e-10;

// Dense complex matrix of dimension 2 or 4, stored inline so states are
// cheap value types.  Only the operations the simulation needs are
// provided; this is deliberately not a general linear-algebra type.
class ComplexMatrix {
public:
    explicit ComplexMatrix(int dim) : dim_(dim) {
        if (dim != 2 && dim != 4)
            throw std::invalid_argument("ComplexMatrix: dim must be 2 or 4");
    }

    static ComplexMatrix identity(int dim) {
        ComplexMatrix m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }

    int dim() const { return dim_; }

    complex_t& operator()(int r, int c) { return a_[index(r, c)]; }
    const complex_t& operator()(int r, int c) const { return a_[index(r, c)]; }

    ComplexMatrix adjoint() const {
        ComplexMatrix m(dim_);
        for (int r = 0; r < dim_; ++r)
            for (int c = 0; c < dim_; ++c) m(r, c) = std::conj((*this)(c, r));
        return m;
    }

    complex_t trace() const {
        complex_t t = 0.0;
        for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
        return t;
    }

    // Largest deviation from Hermiticity, max |a(r,c) - conj(a(c,r))|.
    double hermiticity_error() const {
        double worst = 0.0;
        for (int r = 0; r < dim_; ++r)
            for (int c = 0; c < dim_; ++c)
                worst = std::max(worst,
                                 std::abs((*this)(r, c) - std::conj((*this)(c, r))));
        return worst;
    }

    ComplexMatrix& operator+=(const ComplexMatrix& o) {
        check_same_dim(o);
        for (int i = 0; i < dim_ * dim_; ++i) a_[i] += o.a_[i];
        return *this;
    }
    ComplexMatrix& operator-=(const ComplexMatrix& o) {
        check_same_dim(o);
        for (int i = 0; i < dim_ * dim_; ++i) a_[i] -= o.a_[i];
        return *this;
    }
    ComplexMatrix& operator*=(complex_t s) {
        for (int i = 0; i < dim_ * dim_; ++i) a_[i] *= s;
        return *this;
    }

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) {
        return a += b;
    }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) {
        return a -= b;
    }
    friend ComplexMatrix operator*(complex_t s, ComplexMatrix m) { return m *= s; }

    friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
        a.check_same_dim(b);
        ComplexMatrix m(a.dim_);
        for (int r = 0; r < a.dim_; ++r)
            for (int k = 0; k < a.dim_; ++k) {
                const complex_t ark = a(r, k);
                if (ark == complex_t{}) continue;
                for (int c = 0; c < a.dim_; ++c) m(r, c) += ark * b(k, c);
            }
        return m;
    }

private:
    int index(int r, int c) const {
        if (r < 0 || r >= dim_ || c < 0 || c >= dim_)
            throw std::out_of_range("ComplexMatrix: index out of range");
        return r * dim_ + c;
    }
    void check_same_dim(const ComplexMatrix& o) const {
        if (dim_ != o.dim_)
            throw std::invalid_argument("ComplexMatrix: dimension mismatch");
    }

    int dim_;
    std::array<complex_t, 16> a_{};
};

// Kronecker product; the first argument is the photon factor.
inline ComplexMatrix kron(const ComplexMatrix& p, const ComplexMatrix& a) {
    if (p.dim() != 2 || a.dim() != 2)
        throw std::invalid_argument("kron: expects two single-qubit matrices");
    ComplexMatrix m(4);
    for (int pr = 0; pr < 2; ++pr)
        for (int pc = 0; pc < 2; ++pc)
            for (int ar = 0; ar < 2; ++ar)
                for (int ac = 0; ac < 2; ++ac)
                    m(2 * pr + ar, 2 * pc + ac) = p(pr, pc) * a(ar, ac);
    return m;
}

inline ComplexMatrix pauli_x() {
    ComplexMatrix m(2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    return m;
}
inline ComplexMatrix pauli_y() {
    ComplexMatrix m(2);
    m(0, 1) = complex_t(0.0, -1.0);
    m(1, 0) = complex_t(0.0, 1.0);
    return m;
}
inline ComplexMatrix pauli_z() {
    ComplexMatrix m(2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}

// Eigendecomposition of a Hermitian matrix (ascending eigenvalues, unit
// eigenvector columns).  Thin wrapper over Eigen's self-adjoint solver so
// the rest of the library stays independent of the backing library.
struct EigenSystem {
    std::array<double, 4> values{};  // first dim entries are valid
    ComplexMatrix vectors;           // column k is the k-th eigenvector
    int dim;
};

inline EigenSystem hermitian_eigensystem(const ComplexMatrix& m) {
    if (m.hermiticity_error() > 1e-9)
        throw std::invalid_argument("hermitian_eigensystem: matrix is not Hermitian");
    const int d = m.dim();
    Eigen::MatrixXcd em(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) em(r, c) = m(r, c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(em);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eigensystem: solver failed");
    EigenSystem out{{}, ComplexMatrix(d), d};
    for (int i = 0; i < d; ++i) out.values[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) out.vectors(r, c) = solver.eigenvectors()(r, c);
    return out;
}

inline double min_eigenvalue(const ComplexMatrix& m) {
    return hermitian_eigensystem(m).values[0];
}

// Normalised pure state of one qubit (dim 2) or the pair (dim 4).
class PureState {
public:
    PureState(int dim, std::array<complex_t, 4> amplitudes)
        : dim_(dim), amp_(amplitudes) {
        if (dim != 2 && dim != 4)
            throw std::invalid_argument("PureState: dim must be 2 or 4");
        double norm2 = 0.0;
        for (int i = 0; i < dim; ++i) norm2 += std::norm(amp_[static_cast<std::size_t>(i)]);
        if (std::abs(norm2 - 1.0) > 1e-12)
            throw std::invalid_argument("PureState: amplitudes are not normalised");
    }

    int dim() const { return dim_; }
    complex_t amplitude(int i) const {
        if (i < 0 || i >= dim_) throw std::out_of_range("PureState: index");
        return amp_[static_cast<std::size_t>(i)];
    }

private:
    int dim_;
    std::array<complex_t, 4> amp_;
};

// The ideal heralded pair state (|R,down> + |L,up>)/sqrt(2).
inline PureState bell_state() {
    const double r = 1.0 / std::numbers::sqrt2;
    return PureState(4, {complex_t(0.0), complex_t(r), complex_t(r), complex_t(0.0)});
}

// Physical density operator: Hermitian, unit trace, positive semidefinite
// within tolerance.  Construction validates, so every DensityMatrix in
// circulation satisfies the invariants.
class DensityMatrix {
public:
    explicit DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
        if (m_.hermiticity_error() > kHermiticityTol)
            throw std::invalid_argument("DensityMatrix: not Hermitian");
        if (std::abs(m_.trace() - complex_t(1.0)) > kTraceTol)
            throw std::invalid_argument("DensityMatrix: trace is not 1");
        if (min_eigenvalue(m_) < kEigenvalueFloor)
            throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    }

    static DensityMatrix pure(const PureState& psi) {
        ComplexMatrix m(psi.dim());
        for (int r = 0; r < psi.dim(); ++r)
            for (int c = 0; c < psi.dim(); ++c)
                m(r, c) = psi.amplitude(r) * std::conj(psi.amplitude(c));
        return DensityMatrix(std::move(m));
    }

    static DensityMatrix maximally_mixed(int dim) {
        ComplexMatrix m = ComplexMatrix::identity(dim);
        m *= complex_t(1.0 / dim);
        return DensityMatrix(std::move(m));
    }

    int dim() const { return m_.dim(); }
    const ComplexMatrix& matrix() const { return m_; }
    complex_t entry(int r, int c) const { return m_(r, c); }

private:
    ComplexMatrix m_;
};

inline DensityMatrix density_of(const PureState& psi) {
    return DensityMatrix::pure(psi);
}

enum class Subsystem { photon, atom };

// Raw partial trace on matrix entries; used internally on unnormalised
// intermediates as well as on physical states.
inline ComplexMatrix partial_trace_raw(const ComplexMatrix& m, Subsystem keep) {
    if (m.dim() != 4)
        throw std::invalid_argument("partial_trace: expects a two-qubit matrix");
    ComplexMatrix out(2);
    if (keep == Subsystem::atom) {
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int p = 0; p < 2; ++p) out(a, b) += m(2 * p + a, 2 * p + b);
    } else {
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q)
                for (int a = 0; a < 2; ++a) out(p, q) += m(2 * p + a, 2 * q + a);
    }
    return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem keep) {
    return DensityMatrix(partial_trace_raw(rho.matrix(), keep));
}

// Measurement axis on the Bloch sphere; theta is the polar angle from +z
// and phi the azimuth of the "+" outcome.
struct MeasurementBasis {
    double theta = 0.0;
    double phi = 0.0;

    static MeasurementBasis z() { return {0.0, 0.0}; }
    static MeasurementBasis x() { return {std::numbers::pi / 2.0, 0.0}; }
    static MeasurementBasis y() { return {std::numbers::pi / 2.0, std::numbers::pi / 2.0}; }
    static MeasurementBasis equatorial(double azimuth) {
        return {std::numbers::pi / 2.0, azimuth};
    }

    // n . sigma for this axis.
    ComplexMatrix axis_operator() const {
        ComplexMatrix m(2);
        const double ct = std::cos(theta), st = std::sin(theta);
        m(0, 0) = ct;
        m(1, 1) = -ct;
        m(0, 1) = st * std::exp(complex_t(0.0, -phi));
        m(1, 0) = st * std::exp(complex_t(0.0, phi));
        return m;
    }

    // Projector onto the +1 (sign=+1) or -1 (sign=-1) eigenspace.
    ComplexMatrix projector(int sign) const {
        if (sign != 1 && sign != -1)
            throw std::invalid_argument("projector: sign must be +1 or -1");
        ComplexMatrix m = axis_operator();
        m *= complex_t(0.5 * sign);
        return m += complex_t(0.5) * ComplexMatrix::identity(2);
    }
};

namespace detail {
inline double clamp_probability(double p, const char* what) {
    if (p < -1e-9 || p > 1.0 + 1e-9)
        throw std::runtime_error(std::string(what) + ": probability out of range");
    return std::min(1.0, std::max(0.0, p));
}
}  // namespace detail

// Joint projective-measurement probabilities for a photon axis and an
// atom axis.  Outcome order: (+,+), (+,-), (-,+), (-,-), photon first.
inline std::array<double, 4> measure_prob(const DensityMatrix& rho,
                                          const MeasurementBasis& photon_basis,
                                          const MeasurementBasis& atom_basis) {
    if (rho.dim() != 4)
        throw std::invalid_argument("measure_prob: expects a two-qubit state");
    std::array<double, 4> probs{};
    int k = 0;
    for (int sp : {+1, -1})
        for (int sa : {+1, -1}) {
            const ComplexMatrix proj =
                kron(photon_basis.projector(sp), atom_basis.projector(sa));
            probs[static_cast<std::size_t>(k++)] = detail::clamp_probability(
                (proj * rho.matrix()).trace().real(), "measure_prob");
        }
    const double sum = probs[0] + probs[1] + probs[2] + probs[3];
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::runtime_error("measure_prob: probabilities do not sum to 1");
    for (double& p : probs) p /= sum;
    return probs;
}

// Single-qubit measurement probabilities, outcome order (+, -).
inline std::array<double, 2> measure_prob_single(const DensityMatrix& rho,
                                                 const MeasurementBasis& basis) {
    if (rho.dim() != 2)
        throw std::invalid_argument("measure_prob_single: expects a one-qubit state");
    const double pp = detail::clamp_probability(
        (basis.projector(+1) * rho.matrix()).trace().real(), "measure_prob_single");
    return {pp, 1.0 - pp};
}

// Collapse of the pair state on a photon measurement outcome: returns the
// outcome probability and the conditional atomic state.
inline std::pair<double, DensityMatrix> conditional_atom_state(
    const DensityMatrix& rho, const MeasurementBasis& photon_basis, int sign) {
    if (rho.dim() != 4)
        throw std::invalid_argument("conditional_atom_state: expects a two-qubit state");
    const ComplexMatrix proj = kron(photon_basis.projector(sign), ComplexMatrix::identity(2));
    const ComplexMatrix collapsed = proj * rho.matrix() * proj;
    const double prob =
        detail::clamp_probability(collapsed.trace().real(), "conditional_atom_state");
    if (prob < 1e-12)
        throw std::runtime_error("conditional_atom_state: negligible branch probability");
    ComplexMatrix atom = partial_trace_raw(collapsed, Subsystem::atom);
    atom *= complex_t(1.0 / prob);
    // Symmetrise away rounding noise before re-validating as a state.
    ComplexMatrix sym = atom;
    sym += atom.adjoint();
    sym *= complex_t(0.5);
    return {prob, DensityMatrix(std::move(sym))};
}

// Overlap fidelity <psi| rho |psi> with a pure reference state.
inline double fidelity(const DensityMatrix& rho, const PureState& psi) {
    if (rho.dim() != psi.dim())
        throw std::invalid_argument("fidelity: dimension mismatch");
    complex_t f = 0.0;
    for (int r = 0; r < rho.dim(); ++r)
        for (int c = 0; c < rho.dim(); ++c)
            f += std::conj(psi.amplitude(r)) * rho.entry(r, c) * psi.amplitude(c);
    return detail::clamp_probability(f.real(), "fidelity");
}

inline double purity(const DensityMatrix& rho) {
    return detail::clamp_probability((rho.matrix() * rho.matrix()).trace().real(),
                                     "purity");
}

// White-noise admixture on the photon side: with probability p the pair is
// untouched, otherwise the photon is replaced by a maximally mixed qubit
// while the atom keeps its marginal.
inline DensityMatrix add_photon_white_noise(const DensityMatrix& rho, double p) {
    if (rho.dim() != 4)
        throw std::invalid_argument("add_photon_white_noise: expects a two-qubit state");
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("add_photon_white_noise: weight out of range");
    const ComplexMatrix atom = partial_trace_raw(rho.matrix(), Subsystem::atom);
    ComplexMatrix half = ComplexMatrix::identity(2);
    half *= complex_t(0.5);
    ComplexMatrix noise = kron(half, atom);
    ComplexMatrix mixed = rho.matrix();
    mixed *= complex_t(p);
    noise *= complex_t(1.0 - p);
    mixed += noise;
    return DensityMatrix(std::move(mixed));
}

// Werner-type mixture of the ideal pair state with photon white noise.
inline DensityMatrix werner_state(double p) {
    return add_photon_white_noise(density_of(bell_state()), p);
}

// Fidelity of such a mixture against the ideal state when the clean part
// itself has fidelity f0: p*f0 + (1-p)/4.
inline double bell_fidelity_with_noise(double p, double f0) {
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("bell_fidelity_with_noise: weight out of range");
    return p * f0 + (1.0 - p) / 4.0;
}

// Signal weight that reproduces a target mixture fidelity, inverse of the
// formula above for a clean-part fidelity f0.
inline double noise_weight_for_fidelity(double target, double f0) {
    if (f0 <= 0.25)
        throw std::invalid_argument("noise_weight_for_fidelity: f0 must exceed 1/4");
    const double p = (target - 0.25) / (f0 - 0.25);
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("noise_weight_for_fidelity: target unreachable");
    return p;
}

}  // namespace heraldsim
