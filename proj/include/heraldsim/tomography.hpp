#pragma once

// Two-qubit state tomography: simulated counts in the nine Pauli product
// settings, linear-inversion reconstruction, projection of the spectrum
// onto the probability simplex (nearest physical state in Frobenius
// norm), and bootstrap error bars for the pair fidelity.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "heraldsim/csv.hpp"
#include "heraldsim/qstate.hpp"
#include "heraldsim/readout.hpp"
#include "heraldsim/rng.hpp"

namespace heraldsim {

enum class PauliAxis { x, y, z };

inline const char* axis_name(PauliAxis a) {
    switch (a) {
        case PauliAxis::x: return "x";
        case PauliAxis::y: return "y";
        default: return "z";
    }
}

inline MeasurementBasis basis_for(PauliAxis a) {
    switch (a) {
        case PauliAxis::x: return MeasurementBasis::x();
        case PauliAxis::y: return MeasurementBasis::y();
        default: return MeasurementBasis::z();
    }
}

inline std::vector<std::pair<PauliAxis, PauliAxis>> all_pauli_pairs() {
    std::vector<std::pair<PauliAxis, PauliAxis>> out;
    for (PauliAxis p : {PauliAxis::x, PauliAxis::y, PauliAxis::z})
        for (PauliAxis a : {PauliAxis::x, PauliAxis::y, PauliAxis::z})
            out.emplace_back(p, a);
    return out;
}

struct TomographySettings {
    int shots_per_basis = 10000;
    std::vector<std::pair<PauliAxis, PauliAxis>> bases = all_pauli_pairs();
    std::uint64_t seed = 1;

    void validate() const {
        if (shots_per_basis < 1)
            throw std::invalid_argument("TomographySettings: shots_per_basis < 1");
        if (bases.empty())
            throw std::invalid_argument("TomographySettings: no measurement bases");
    }
};

enum class MeasureChain { ideal, full_readout };

// Counts per basis setting; outcome order (+,+), (+,-), (-,+), (-,-)
// with the photon sign first.
struct CountsTable {
    struct Setting {
        PauliAxis photon;
        PauliAxis atom;
        std::array<std::uint64_t, 4> counts{};
    };
    std::vector<Setting> settings;
    int shots_per_basis = 0;

    const Setting* find(PauliAxis p, PauliAxis a) const {
        for (const Setting& s : settings)
            if (s.photon == p && s.atom == a) return &s;
        return nullptr;
    }
};

// Sample measurement counts for every requested basis.  In ideal mode
// outcomes follow measure_prob directly; in full-readout mode the photon
// outcome collapses the pair and the atomic result runs through the
// microwave-plus-fluorescence chain.
inline CountsTable simulate_counts(const DensityMatrix& rho,
                                   const TomographySettings& settings,
                                   MeasureChain chain,
                                   const ReadoutChain& readout = ReadoutChain{}) {
    settings.validate();
    if (rho.dim() != 4)
        throw std::invalid_argument("simulate_counts: expects a pair state");
    CountsTable table;
    table.shots_per_basis = settings.shots_per_basis;
    std::uint64_t basis_index = 0;
    for (const auto& [pax, aax] : settings.bases) {
        CountsTable::Setting s{pax, aax, {}};
        RandomStream rng(stream_seed(settings.seed, "tomography", basis_index++));
        if (chain == MeasureChain::ideal) {
            const auto probs = measure_prob(rho, basis_for(pax), basis_for(aax));
            for (int i = 0; i < settings.shots_per_basis; ++i)
                ++s.counts[static_cast<std::size_t>(rng.discrete(probs))];
        } else {
            const MeasurementBasis pb = basis_for(pax);
            const auto photon_probs =
                measure_prob_single(partial_trace(rho, Subsystem::photon), pb);
            // Collapse only reachable branches; an unreachable one keeps a
            // placeholder state that no draw ever selects.
            const DensityMatrix atom_plus =
                photon_probs[0] > 1e-12 ? conditional_atom_state(rho, pb, +1).second
                                        : DensityMatrix::maximally_mixed(2);
            const DensityMatrix atom_minus =
                photon_probs[1] > 1e-12 ? conditional_atom_state(rho, pb, -1).second
                                        : DensityMatrix::maximally_mixed(2);
            for (int i = 0; i < settings.shots_per_basis; ++i) {
                const bool photon_plus = rng.bernoulli(photon_probs[0]);
                const DensityMatrix& atom = photon_plus ? atom_plus : atom_minus;
                const AtomOutcome out =
                    atom_measurement(atom, basis_for(aax), readout, rng);
                const int idx =
                    (photon_plus ? 0 : 2) + (out == AtomOutcome::up ? 0 : 1);
                ++s.counts[static_cast<std::size_t>(idx)];
            }
        }
        table.settings.push_back(s);
    }
    return table;
}

namespace detail {

inline ComplexMatrix pauli_by_index(int i) {
    switch (i) {
        case 0: return ComplexMatrix::identity(2);
        case 1: return pauli_x();
        case 2: return pauli_y();
        default: return pauli_z();
    }
}

inline int axis_index(PauliAxis a) {
    switch (a) {
        case PauliAxis::x: return 1;
        case PauliAxis::y: return 2;
        default: return 3;
    }
}

}  // namespace detail

// Linear inversion: estimate all Pauli-product expectation values from
// the counts (joint terms directly, single-qubit terms from marginals
// averaged over the partner's settings) and assemble
// rho = (1/4) sum_ij S_ij sigma_i x sigma_j.  The result is Hermitian
// with unit trace by construction but may have a negative eigenvalue.
inline ComplexMatrix linear_inversion(const CountsTable& table) {
    for (PauliAxis p : {PauliAxis::x, PauliAxis::y, PauliAxis::z})
        for (PauliAxis a : {PauliAxis::x, PauliAxis::y, PauliAxis::z})
            if (table.find(p, a) == nullptr)
                throw std::invalid_argument(
                    "linear_inversion: incomplete basis set (need all 9 Pauli pairs)");

    double s[4][4] = {};
    double photon_acc[4] = {}, atom_acc[4] = {};
    int photon_n[4] = {}, atom_n[4] = {};
    s[0][0] = 1.0;
    for (const CountsTable::Setting& st : table.settings) {
        const double n = static_cast<double>(st.counts[0] + st.counts[1] +
                                             st.counts[2] + st.counts[3]);
        if (n == 0.0) throw std::invalid_argument("linear_inversion: empty setting");
        const double pp = static_cast<double>(st.counts[0]) / n;
        const double pm = static_cast<double>(st.counts[1]) / n;
        const double mp = static_cast<double>(st.counts[2]) / n;
        const double mm = static_cast<double>(st.counts[3]) / n;
        const int i = detail::axis_index(st.photon);
        const int j = detail::axis_index(st.atom);
        s[i][j] = pp - pm - mp + mm;
        photon_acc[i] += pp + pm - mp - mm;
        ++photon_n[i];
        atom_acc[j] += pp - pm + mp - mm;
        ++atom_n[j];
    }
    for (int i = 1; i < 4; ++i) {
        s[i][0] = photon_acc[i] / photon_n[i];
        s[0][i] = atom_acc[i] / atom_n[i];
    }

    ComplexMatrix rho(4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (s[i][j] == 0.0) continue;
            ComplexMatrix term = kron(detail::pauli_by_index(i), detail::pauli_by_index(j));
            term *= complex_t(0.25 * s[i][j]);
            rho += term;
        }
    return rho;
}

// Nearest density matrix in Frobenius norm: eigendecompose and project
// the spectrum onto the probability simplex (clip negatives, shift the
// rest uniformly to preserve the unit trace), then reassemble.
inline DensityMatrix project_physical(const ComplexMatrix& m) {
    if (m.hermiticity_error() > 1e-9)
        throw std::invalid_argument("project_physical: matrix is not Hermitian");
    if (std::abs(m.trace() - complex_t(1.0)) > 1e-9)
        throw std::invalid_argument("project_physical: trace is not 1");
    ComplexMatrix sym = m;
    sym += m.adjoint();
    sym *= complex_t(0.5);

    const EigenSystem es = hermitian_eigensystem(sym);
    const int d = es.dim;
    std::array<double, 4> desc{};
    for (int i = 0; i < d; ++i) desc[static_cast<std::size_t>(i)] = es.values[static_cast<std::size_t>(d - 1 - i)];
    // simplex projection of the spectrum
    double cumulative = 0.0, theta = 0.0;
    int support = 0;
    for (int k = 0; k < d; ++k) {
        cumulative += desc[static_cast<std::size_t>(k)];
        const double t = (1.0 - cumulative) / (k + 1);
        if (desc[static_cast<std::size_t>(k)] + t > 0.0) {
            support = k + 1;
            theta = t;
        }
    }
    ComplexMatrix out(d);
    for (int i = 0; i < d; ++i) {
        const double clipped =
            (d - 1 - i) < support
                ? std::max(0.0, es.values[static_cast<std::size_t>(i)] + theta)
                : 0.0;
        if (clipped == 0.0) continue;
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c)
                out(r, c) += clipped * es.vectors(r, i) * std::conj(es.vectors(c, i));
    }
    return DensityMatrix(std::move(out));
}

// Half trace norm of the difference between two states.
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("trace_distance: dimension mismatch");
    ComplexMatrix diff = a.matrix();
    diff -= b.matrix();
    const EigenSystem es = hermitian_eigensystem(diff);
    double sum = 0.0;
    for (int i = 0; i < es.dim; ++i) sum += std::abs(es.values[static_cast<std::size_t>(i)]);
    return 0.5 * sum;
}

struct FidelityEstimate {
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool witness = false;  // CI lower bound above the 1/2 entanglement bound
};

// Reconstruct, compute the overlap with the ideal pair state, and attach
// a percentile bootstrap interval from multinomial resampling.
inline FidelityEstimate fidelity_with_bell(const CountsTable& table, int resamples = 200,
                                           std::uint64_t seed = 1) {
    if (resamples < 2)
        throw std::invalid_argument("fidelity_with_bell: need at least 2 resamples");
    const PureState ideal = bell_state();
    const double estimate =
        fidelity(project_physical(linear_inversion(table)), ideal);

    RandomStream rng(stream_seed(seed, "bootstrap", 0));
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        CountsTable resampled;
        resampled.shots_per_basis = table.shots_per_basis;
        for (const CountsTable::Setting& st : table.settings) {
            const double n = static_cast<double>(st.counts[0] + st.counts[1] +
                                                 st.counts[2] + st.counts[3]);
            const std::array<double, 4> freq{
                static_cast<double>(st.counts[0]) / n, static_cast<double>(st.counts[1]) / n,
                static_cast<double>(st.counts[2]) / n, static_cast<double>(st.counts[3]) / n};
            CountsTable::Setting rs{st.photon, st.atom, {}};
            for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(n); ++i)
                ++rs.counts[static_cast<std::size_t>(rng.discrete(freq))];
            resampled.settings.push_back(rs);
        }
        values.push_back(
            fidelity(project_physical(linear_inversion(resampled)), ideal));
    }
    std::sort(values.begin(), values.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] * (1.0 - frac) + values[hi] * frac;
    };
    FidelityEstimate out;
    out.estimate = estimate;
    out.ci_low = std::min(quantile(0.16), estimate);
    out.ci_high = std::max(quantile(0.84), estimate);
    out.witness = out.ci_low > 0.5;
    return out;
}

// CSV export: one row per basis setting and outcome pair.
inline void write_counts_csv(const std::filesystem::path& path, const CountsTable& table) {
    CsvWriter w(path);
    w.row("photon_axis", "atom_axis", "outcome_p", "outcome_a", "count");
    static const char* signs[2] = {"+", "-"};
    for (const CountsTable::Setting& st : table.settings)
        for (int k = 0; k < 4; ++k)
            w.row(axis_name(st.photon), axis_name(st.atom), signs[k / 2], signs[k % 2],
                  st.counts[static_cast<std::size_t>(k)]);
}

}  // namespace heraldsim
