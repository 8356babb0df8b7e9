#pragma once

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "oscillator.hpp"
#include "perturbative.hpp"
#include "spectral.hpp"
#include "special.hpp"
#include "twobath.hpp"

namespace cohsynth {

enum class ModelKind { self_induced, two_spin, multi_drive, multiplex, two_bath, oscillator, custom };

// coupling[b] is the vector n of sigma . n multiplying the displacement of bath b.
struct SpinSpec {
    double omega = 1.0;
    std::vector<std::array<double, 3>> coupling;
};

struct OscillatorSpec {
    double E = 1.0;
    double g = 0.0;
    int cutoff = 8;
    std::size_t bath = 0;
};

inline constexpr std::size_t default_max_dimension = 20000;

struct ModelSpec {
    ModelKind kind = ModelKind::custom;
    std::vector<SpinSpec> spins;
    std::vector<DiscreteBath> baths;
    std::optional<OscillatorSpec> oscillator;
    int fock_cutoff = 8;
    double beta = 1.0;
    std::size_t max_dimension = default_max_dimension;

    std::size_t mode_count() const {
        std::size_t n = 0;
        for (const auto& b : baths) n += b.size();
        return n;
    }

    double dimension() const {
        double d = std::pow(2.0, static_cast<double>(spins.size()));
        if (oscillator) d *= oscillator->cutoff + 1.0;
        return d * std::pow(fock_cutoff + 1.0, static_cast<double>(mode_count()));
    }

    void validate() const {
        require(fock_cutoff >= 2, "fock_cutoff", "must be at least 2");
        require(beta >= 0, "beta", "must be non-negative");
        for (const auto& s : spins) {
            require(std::isfinite(s.omega), "spins", "frequency must be finite");
            require(s.coupling.size() <= baths.size(), "spins", "coupling refers to a missing bath");
        }
        if (oscillator) {
            require(oscillator->cutoff >= 2, "oscillator.cutoff", "must be at least 2");
            require(oscillator->E > 0, "oscillator.E", "must be positive");
            require(oscillator->bath < baths.size(), "oscillator.bath", "refers to a missing bath");
        }
        if (dimension() > static_cast<double>(max_dimension))
            throw DimensionExceeded("Hilbert space dimension " + std::to_string(dimension()) + " exceeds limit " +
                                    std::to_string(max_dimension));
    }
};

// Tensor factors ordered slowest to fastest: spins, oscillator, bath modes.
struct TensorLayout {
    std::vector<int> dims;

    std::size_t size() const {
        return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
    }
    std::vector<std::size_t> strides() const {
        std::vector<std::size_t> s(dims.size(), 1);
        for (std::size_t k = dims.size(); k-- > 1;) s[k - 1] = s[k] * dims[k];
        return s;
    }
    std::vector<int> decode(std::size_t index) const {
        std::vector<int> d(dims.size());
        for (std::size_t k = dims.size(); k-- > 0;) {
            d[k] = static_cast<int>(index % dims[k]);
            index /= dims[k];
        }
        return d;
    }

    static TensorLayout of(const ModelSpec& spec) {
        TensorLayout l;
        l.dims.assign(spec.spins.size(), 2);
        if (spec.oscillator) l.dims.push_back(spec.oscillator->cutoff + 1);
        l.dims.insert(l.dims.end(), spec.mode_count(), spec.fock_cutoff + 1);
        return l;
    }
};

struct DenseOperator {
    TensorLayout layout;
    Eigen::MatrixXcd matrix;

    std::size_t dimension() const { return static_cast<std::size_t>(matrix.rows()); }
    double max_abs() const { return matrix.size() ? matrix.cwiseAbs().maxCoeff() : 0.0; }
    bool is_hermitian(double rel = 1e-12) const {
        return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff() <= rel * std::max(max_abs(), 1e-300);
    }
    bool is_real() const { return matrix.imag().cwiseAbs().maxCoeff() == 0.0; }
};

inline DenseOperator build_hamiltonian(const ModelSpec& spec) {
    spec.validate();
    using cd = std::complex<double>;
    const TensorLayout layout = TensorLayout::of(spec);
    const auto stride = layout.strides();
    const std::size_t dim = layout.size();
    const std::size_t ns = spec.spins.size();
    const std::size_t osc = ns;
    const std::size_t first_mode = ns + (spec.oscillator ? 1 : 0);

    struct Mode {
        std::size_t factor;
        std::size_t bath;
        double frequency;
        double coupling;
    };
    std::vector<Mode> modes;
    for (std::size_t b = 0; b < spec.baths.size(); ++b)
        for (const auto& m : spec.baths[b].modes())
            modes.push_back({first_mode + modes.size(), b, m.frequency, m.coupling});

    DenseOperator H{layout, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))};
    auto& M = H.matrix;
    for (std::size_t i = 0; i < dim; ++i) {
        const auto occ = layout.decode(i);
        const auto col = static_cast<Eigen::Index>(i);
        double diag = 0.0;
        for (std::size_t j = 0; j < ns; ++j) diag += 0.5 * spec.spins[j].omega * (occ[j] == 0 ? 1.0 : -1.0);
        if (spec.oscillator) diag += spec.oscillator->E * (occ[osc] + 0.5);
        for (const auto& m : modes) diag += m.frequency * occ[m.factor];
        M(col, col) += diag;

        for (const auto& m : modes) {
            const int n = occ[m.factor];
            // (b + b^dag) on this mode: lowered and raised targets with amplitudes.
            std::array<std::pair<std::ptrdiff_t, double>, 2> moves{
                std::pair{n > 0 ? -1 : 0, n > 0 ? std::sqrt(double(n)) : 0.0},
                std::pair{n < spec.fock_cutoff ? 1 : 0, n < spec.fock_cutoff ? std::sqrt(n + 1.0) : 0.0}};
            for (auto [dn, amp] : moves) {
                if (amp == 0.0) continue;
                const std::size_t ib = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) +
                                                                dn * static_cast<std::ptrdiff_t>(stride[m.factor]));
                const double w = m.coupling * amp;
                for (std::size_t j = 0; j < ns; ++j) {
                    if (m.bath >= spec.spins[j].coupling.size()) continue;
                    const auto& nv = spec.spins[j].coupling[m.bath];
                    const bool up = occ[j] == 0;
                    if (nv[2] != 0.0) M(static_cast<Eigen::Index>(ib), col) += w * nv[2] * (up ? 1.0 : -1.0);
                    if (nv[0] != 0.0 || nv[1] != 0.0) {
                        const std::size_t flipped = up ? ib + stride[j] : ib - stride[j];
                        const cd y = up ? cd(0.0, 1.0) : cd(0.0, -1.0);
                        M(static_cast<Eigen::Index>(flipped), col) += w * (nv[0] + y * nv[1]);
                    }
                }
                if (spec.oscillator && m.bath == spec.oscillator->bath && spec.oscillator->g != 0.0) {
                    const int na = occ[osc];
                    const double gw = spec.oscillator->g * w;
                    if (na > 0) M(static_cast<Eigen::Index>(ib - stride[osc]), col) += gw * std::sqrt(double(na));
                    if (na < spec.oscillator->cutoff)
                        M(static_cast<Eigen::Index>(ib + stride[osc]), col) += gw * std::sqrt(na + 1.0);
                }
            }
        }
    }
    if (!H.is_hermitian()) throw NumericError("assembled Hamiltonian is not Hermitian");
    return H;
}

struct EigenBlock {
    std::vector<std::size_t> indices;
    Eigen::VectorXd energies;
    Eigen::MatrixXcd vectors;
};

struct ThermalState {
    TensorLayout layout;
    std::vector<EigenBlock> blocks;
    std::vector<Eigen::VectorXd> probabilities;
    double beta = 1.0;
    double log_z = 0.0;
    double ground_energy = 0.0;

    std::vector<double> spectrum() const {
        std::vector<double> e;
        for (const auto& b : blocks) e.insert(e.end(), b.energies.data(), b.energies.data() + b.energies.size());
        std::sort(e.begin(), e.end());
        return e;
    }
};

namespace detail {

inline std::vector<std::vector<std::size_t>> connected_blocks(const Eigen::MatrixXcd& H) {
    const std::size_t n = static_cast<std::size_t>(H.rows());
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = j + 1; i < n; ++i)
            if (H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) {
                const auto a = find(i), b = find(j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& g : groups)
        if (!g.empty()) out.push_back(std::move(g));
    return out;
}

inline EigenBlock diagonalize_block(const Eigen::MatrixXcd& H, std::vector<std::size_t> idx) {
    const auto n = static_cast<lapack_int>(idx.size());
    Eigen::MatrixXcd sub(n, n);
    bool real = true;
    for (lapack_int c = 0; c < n; ++c)
        for (lapack_int r = 0; r < n; ++r) {
            sub(r, c) = H(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c]));
            if (sub(r, c).imag() != 0.0) real = false;
        }
    EigenBlock b;
    b.indices = std::move(idx);
    b.energies.resize(n);
    lapack_int info = 0;
    if (real) {
        Eigen::MatrixXd a = sub.real();
        info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, b.energies.data());
        b.vectors = a.cast<std::complex<double>>();
    } else {
        info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, sub.data(), n, b.energies.data());
        b.vectors = std::move(sub);
    }
    if (info != 0) throw NumericError("eigensolver failed with info " + std::to_string(info));
    return b;
}

}  // namespace detail

inline constexpr double degeneracy_tolerance = 1e-12;

inline ThermalState thermal_state(const DenseOperator& H, double beta) {
    require(beta >= 0, "beta", "must be non-negative");
    if (!H.is_hermitian()) throw DomainError("thermal_state requires a Hermitian operator");
    ThermalState st;
    st.layout = H.layout;
    st.beta = beta;
    for (auto& idx : detail::connected_blocks(H.matrix)) st.blocks.push_back(detail::diagonalize_block(H.matrix, std::move(idx)));

    double e0 = std::numeric_limits<double>::infinity();
    for (const auto& b : st.blocks) e0 = std::min(e0, b.energies.minCoeff());
    st.ground_energy = e0;

    KahanSum z;
    st.probabilities.reserve(st.blocks.size());
    const bool zero_t = is_zero_temperature(beta);
    const double tol = degeneracy_tolerance * std::max(1.0, std::abs(e0));
    for (const auto& b : st.blocks) {
        Eigen::VectorXd w(b.energies.size());
        for (Eigen::Index k = 0; k < w.size(); ++k) {
            const double de = b.energies[k] - e0;
            w[k] = zero_t ? (de <= tol ? 1.0 : 0.0) : std::exp(-beta * de);
            z += w[k];
        }
        st.probabilities.push_back(std::move(w));
    }
    for (auto& p : st.probabilities) p /= z.value();
    st.log_z = zero_t ? (e0 > 0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity())
                      : -beta * e0 + std::log(z.value());
    if (zero_t && e0 == 0.0) st.log_z = std::log(z.value());
    return st;
}

// Reduced density matrix on the factors with keep[k] == true.
inline DenseOperator reduce_to_spins(const ThermalState& st, const std::vector<bool>& keep) {
    const auto& dims = st.layout.dims;
    require(keep.size() == dims.size(), "keep", "mask length must match the number of tensor factors");
    TensorLayout kept;
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (keep[k]) kept.dims.push_back(dims[k]);
    const auto kstride = kept.strides();
    const auto kd = static_cast<Eigen::Index>(kept.size());

    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(kd, kd);
    for (std::size_t bi = 0; bi < st.blocks.size(); ++bi) {
        const auto& b = st.blocks[bi];
        const Eigen::VectorXd sp = st.probabilities[bi].cwiseSqrt();
        // Rows of W = V diag(sqrt p) sharing the traced-out index contract together.
        std::vector<std::pair<std::size_t, std::pair<Eigen::Index, Eigen::Index>>> keyed;
        keyed.reserve(b.indices.size());
        for (std::size_t r = 0; r < b.indices.size(); ++r) {
            const auto occ = st.layout.decode(b.indices[r]);
            std::size_t kidx = 0, tidx = 0, ki = 0;
            for (std::size_t k = 0; k < dims.size(); ++k) {
                if (keep[k])
                    kidx += kstride[ki++] * static_cast<std::size_t>(occ[k]);
                else
                    tidx = tidx * dims[k] + static_cast<std::size_t>(occ[k]);
            }
            keyed.push_back({tidx, {static_cast<Eigen::Index>(kidx), static_cast<Eigen::Index>(r)}});
        }
        std::sort(keyed.begin(), keyed.end());
        const Eigen::MatrixXcd W = b.vectors * sp.asDiagonal();
        for (std::size_t s = 0; s < keyed.size();) {
            std::size_t e = s;
            while (e < keyed.size() && keyed[e].first == keyed[s].first) ++e;
            for (std::size_t a = s; a < e; ++a)
                for (std::size_t c = s; c < e; ++c)
                    rho(keyed[a].second.first, keyed[c].second.first) +=
                        W.row(keyed[a].second.second).cwiseProduct(W.row(keyed[c].second.second).conjugate()).sum();
            s = e;
        }
    }
    return {kept, rho};
}

inline double expectation(const DenseOperator& rho, const DenseOperator& obs) {
    if (rho.dimension() != obs.dimension()) throw DomainError("dimension mismatch in expectation");
    const std::complex<double> v = (rho.matrix.transpose().cwiseProduct(obs.matrix)).sum();
    if (std::abs(v.imag()) >= 1e-10) throw NumericError("expectation value has an imaginary residue");
    return v.real();
}

enum class Pauli { x, y, z };

inline Eigen::Matrix2cd pauli(Pauli p) {
    using cd = std::complex<double>;
    Eigen::Matrix2cd m;
    switch (p) {
        case Pauli::x: m << 0, 1, 1, 0; break;
        case Pauli::y: m << 0, cd(0, -1), cd(0, 1), 0; break;
        case Pauli::z: m << 1, 0, 0, -1; break;
    }
    return m;
}

// Product of single-factor operators; factors without an entry act as identity.
inline DenseOperator product_operator(const TensorLayout& layout,
                                      const std::vector<std::pair<std::size_t, Eigen::MatrixXcd>>& factors) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
    for (std::size_t k = 0; k < layout.dims.size(); ++k) {
        Eigen::MatrixXcd f = Eigen::MatrixXcd::Identity(layout.dims[k], layout.dims[k]);
        for (const auto& [idx, op] : factors)
            if (idx == k) f = op;
        Eigen::MatrixXcd next(m.rows() * f.rows(), m.cols() * f.cols());
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                next.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) = m(i, j) * f;
        m = std::move(next);
    }
    return {layout, m};
}

inline Eigen::MatrixXcd position_operator(int cutoff) {
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
    for (int n = 0; n < cutoff; ++n) x(n, n + 1) = x(n + 1, n) = std::sqrt((n + 1) / 2.0);
    return x;
}

struct SpinVector {
    double x, y, z;
};

inline std::vector<bool> keep_only(const TensorLayout& layout, std::initializer_list<std::size_t> factors) {
    std::vector<bool> k(layout.dims.size(), false);
    for (auto f : factors) k.at(f) = true;
    return k;
}

inline SpinVector spin_expectation(const ThermalState& st, std::size_t spin) {
    const DenseOperator rho = reduce_to_spins(st, keep_only(st.layout, {spin}));
    auto e = [&](Pauli p) { return expectation(rho, {rho.layout, pauli(p)}); };
    return {e(Pauli::x), e(Pauli::y), e(Pauli::z)};
}

inline double spin_correlation(const ThermalState& st, std::size_t a, std::size_t b, Pauli pa = Pauli::x,
                               Pauli pb = Pauli::x) {
    const DenseOperator rho = reduce_to_spins(st, keep_only(st.layout, {std::min(a, b), std::max(a, b)}));
    return expectation(rho, product_operator(rho.layout, {{a < b ? 0u : 1u, pauli(pa)}, {a < b ? 1u : 0u, pauli(pb)}}));
}

struct OscillatorMoments {
    double mean;
    double second;
};

inline OscillatorMoments oscillator_moments(const ThermalState& st, std::size_t factor) {
    const DenseOperator rho = reduce_to_spins(st, keep_only(st.layout, {factor}));
    const Eigen::MatrixXcd x = position_operator(rho.layout.dims[0] - 1);
    return {expectation(rho, {rho.layout, x}), expectation(rho, {rho.layout, x * x})};
}

// ------------------------------------------------------------- model builders

inline ModelSpec self_induced_model(const SelfInducedSystem& sys, const DiscreteBath& bath, int cutoff = 8) {
    ModelSpec m;
    m.kind = ModelKind::self_induced;
    m.spins = {{sys.omega1, {{sys.f2, 0.0, sys.f1}}}};
    m.baths = {bath};
    m.fock_cutoff = cutoff;
    m.beta = sys.beta;
    return m;
}

inline ModelSpec two_spin_model(const TwoSpinSystem& sys, const DiscreteBath& bath, int cutoff = 8) {
    ModelSpec m;
    m.kind = ModelKind::two_spin;
    m.spins = {{sys.omega1, {{0.0, 0.0, sys.f1}}}, {sys.omega2, {{sys.f2, 0.0, 0.0}}}};
    m.baths = {bath};
    m.fock_cutoff = cutoff;
    m.beta = sys.beta;
    return m;
}

inline ModelSpec multi_drive_model(const MultiDriveSystem& sys, const DiscreteBath& bath, int cutoff = 8) {
    sys.validate();
    ModelSpec m;
    m.kind = ModelKind::multi_drive;
    for (const auto& d : sys.drives) m.spins.push_back({d.frequency, {{0.0, 0.0, d.coupling}}});
    for (const auto& o : sys.outputs) m.spins.push_back({o.frequency, {{o.coupling, 0.0, 0.0}}});
    m.baths = {bath};
    m.fock_cutoff = cutoff;
    m.beta = sys.beta;
    m.kind = sys.outputs.size() > 1 ? ModelKind::multiplex : ModelKind::multi_drive;
    return m;
}

inline ModelSpec two_bath_model(const TwoBathConfig& cfg, int cutoff = 8) {
    const auto* b1 = std::get_if<DiscreteBath>(&cfg.bath1);
    const auto* b2 = std::get_if<DiscreteBath>(&cfg.bath2);
    if (!b1 || !b2) throw DomainError("the oracle needs discrete baths");
    ModelSpec m;
    m.kind = ModelKind::two_bath;
    for (int j = 0; j < cfg.M; ++j) m.spins.push_back({cfg.omega1, {{0.0, 0.0, cfg.f1}, {0.0, 0.0, 0.0}}});
    for (int j = 0; j < cfg.N; ++j) m.spins.push_back({cfg.omega2, {{0.0, 0.0, 0.0}, {0.0, 0.0, cfg.g1}}});
    m.spins.push_back({cfg.omega, {{cfg.f2, 0.0, 0.0}, {cfg.g2, 0.0, 0.0}}});
    m.baths = {*b1, *b2};
    m.fock_cutoff = cutoff;
    m.beta = cfg.beta;
    return m;
}

inline ModelSpec oscillator_model(const OscillatorSystem& sys, int oscillator_cutoff = 8, int cutoff = 8) {
    const auto* b = std::get_if<DiscreteBath>(&sys.bath);
    if (!b) throw DomainError("the oracle needs a discrete bath");
    ModelSpec m;
    m.kind = ModelKind::oscillator;
    m.spins = {{sys.omega, {{0.0, 0.0, sys.f}}}};
    m.oscillator = OscillatorSpec{sys.E, sys.g, oscillator_cutoff, 0};
    m.baths = {*b};
    m.fock_cutoff = cutoff;
    m.beta = sys.beta;
    return m;
}

inline ModelSpec scaled_couplings(ModelSpec spec, double factor) {
    for (auto& s : spec.spins)
        for (auto& n : s.coupling)
            for (auto& c : n) c *= factor;
    if (spec.oscillator) spec.oscillator->g *= factor;
    return spec;
}

inline ThermalState solve(const ModelSpec& spec) { return thermal_state(build_hamiltonian(spec), spec.beta); }

// ------------------------------------------------------------ convergence

struct ConvergenceRow {
    int cutoff;
    int modes;
    double value;
    double delta;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double extrapolated = 0.0;
    double error_bar = 0.0;
    bool monotone = true;
};

using SpecFactory = std::function<ModelSpec(int cutoff, int modes)>;
using Observable = std::function<double(const ThermalState&)>;

inline ConvergenceTable convergence_scan(const SpecFactory& make, const Observable& observable,
                                         const std::vector<int>& cutoffs, const std::vector<int>& modes) {
    require(!cutoffs.empty() && cutoffs.size() == modes.size(), "schedule", "cutoff and mode lists must match");
    for (std::size_t i = 1; i < cutoffs.size(); ++i)
        require(cutoffs[i] >= cutoffs[i - 1] && modes[i] >= modes[i - 1], "schedule", "must be non-decreasing");
    ConvergenceTable t;
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        const double v = observable(solve(make(cutoffs[i], modes[i])));
        const double d = t.rows.empty() ? 0.0 : v - t.rows.back().value;
        t.rows.push_back({cutoffs[i], modes[i], v, d});
    }
    for (std::size_t i = 2; i < t.rows.size(); ++i)
        if (std::abs(t.rows[i].delta) > std::abs(t.rows[i - 1].delta)) t.monotone = false;
    const auto n = t.rows.size();
    t.extrapolated = t.rows.back().value;
    if (n >= 3) {
        const double d1 = t.rows[n - 2].delta, d2 = t.rows[n - 1].delta;
        if (d1 != d2 && std::abs(d2) < std::abs(d1)) t.extrapolated -= d2 * d2 / (d2 - d1);
        t.error_bar = std::abs(d2);
    } else if (n == 2) {
        t.error_bar = std::abs(t.rows[1].delta);
    }
    return t;
}

struct ScalingFit {
    double exponent;
    std::vector<double> scales;
    std::vector<double> values;
};

inline ScalingFit fit_scaling(std::vector<double> scales, std::vector<double> values) {
    require(scales.size() == values.size() && scales.size() >= 2, "scales", "need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(scales.size());
    for (std::size_t i = 0; i < scales.size(); ++i) {
        const double x = std::log(scales[i]), y = std::log(std::abs(values[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return {(n * sxy - sx * sy) / (n * sxx - sx * sx), std::move(scales), std::move(values)};
}

inline ScalingFit scaling_check(const ModelSpec& spec, const Observable& observable,
                                std::vector<double> scales = {1.0, 0.5, 0.25}) {
    std::vector<double> values;
    for (double s : scales) values.push_back(observable(solve(scaled_couplings(spec, s))));
    return fit_scaling(std::move(scales), std::move(values));
}

// Largest relative deviation of the lowest `levels` eigenvalues from
// s omega / 2 + Omega_1 n - lambda^2 f^2 / Omega_1 for one spin and one mode.
inline double lang_firsov_deviation(double omega, double f, const BathMode& mode, int cutoff, int levels) {
    ModelSpec spec;
    spec.spins = {{omega, {{0.0, 0.0, f}}}};
    spec.baths = {DiscreteBath({mode})};
    spec.fock_cutoff = cutoff;
    spec.beta = 1.0;
    const auto ed = solve(spec).spectrum();
    std::vector<double> exact;
    const double shift = mode.coupling * mode.coupling * f * f / mode.frequency;
    for (int n = 0; n <= cutoff; ++n)
        for (double s : {1.0, -1.0}) exact.push_back(0.5 * s * omega + mode.frequency * n - shift);
    std::sort(exact.begin(), exact.end());
    double worst = 0.0;
    for (int k = 0; k < levels && k < static_cast<int>(ed.size()); ++k)
        worst = std::max(worst, std::abs(ed[k] - exact[k]) / std::max(std::abs(exact[k]), std::abs(omega)));
    return worst;
}

}  // namespace cohsynth
