#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "errors.hpp"
#include "quadrature.hpp"
#include "special.hpp"

namespace cohsynth {

// I(xi) = lambda * xi^s / omega_c^(s-1) * exp(-xi / omega_c)
struct PowerLawDensity {
    double strength = 0.0;
    double exponent = 1.0;
    double cutoff = 1.0;

    void validate() const {
        require(strength >= 0 && std::isfinite(strength), "lambda", "must be finite and non-negative");
        require(exponent > 0 && std::isfinite(exponent), "s", "must be positive");
        require(cutoff > 0 && std::isfinite(cutoff), "omega_c", "must be positive");
    }
    double operator()(double xi) const {
        const double r = xi / cutoff;
        return strength * cutoff * std::pow(r, exponent) * std::exp(-r);
    }
    double upper_limit() const { return cutoff * (exponent + 40.0); }
};

class TabulatedDensity {
public:
    TabulatedDensity() = default;
    TabulatedDensity(std::vector<double> xi, std::vector<double> value)
        : xi_(std::move(xi)), value_(std::move(value)) {
        require(xi_.size() == value_.size(), "samples", "abscissa and value counts differ");
        require(xi_.size() >= 2, "samples", "need at least two samples");
        for (std::size_t i = 0; i < xi_.size(); ++i) {
            require(std::isfinite(xi_[i]) && xi_[i] >= 0, "samples", "abscissae must be finite and non-negative");
            require(std::isfinite(value_[i]) && value_[i] >= 0, "samples", "values must be finite and non-negative");
            if (i > 0) require(xi_[i] > xi_[i - 1], "samples", "abscissae must be strictly increasing");
        }
    }

    double operator()(double x) const {
        if (xi_.empty() || x < xi_.front() || x > xi_.back()) return 0.0;
        const auto it = std::upper_bound(xi_.begin(), xi_.end(), x);
        if (it == xi_.end()) return value_.back();
        const auto j = static_cast<std::size_t>(it - xi_.begin());
        const double t = (x - xi_[j - 1]) / (xi_[j] - xi_[j - 1]);
        return value_[j - 1] + t * (value_[j] - value_[j - 1]);
    }

    std::span<const double> nodes() const { return xi_; }
    std::span<const double> values() const { return value_; }

private:
    std::vector<double> xi_;
    std::vector<double> value_;
};

struct BathMode {
    double frequency;
    double coupling;
};

class DiscreteBath {
public:
    DiscreteBath() = default;
    explicit DiscreteBath(std::vector<BathMode> modes) : modes_(std::move(modes)) {
        for (const auto& m : modes_) {
            require(m.frequency > 0 && std::isfinite(m.frequency), "modes", "frequencies must be positive");
            require(std::isfinite(m.coupling), "modes", "couplings must be finite");
        }
    }

    std::span<const BathMode> modes() const { return modes_; }
    std::size_t size() const { return modes_.size(); }

    DiscreteBath scaled(double factor) const {
        auto m = modes_;
        for (auto& x : m) x.coupling *= factor;
        return DiscreteBath(std::move(m));
    }

private:
    std::vector<BathMode> modes_;
};

using SpectralDensity = std::variant<PowerLawDensity, TabulatedDensity, DiscreteBath>;

inline void validate(const SpectralDensity& d) {
    if (const auto* p = std::get_if<PowerLawDensity>(&d)) p->validate();
}

inline double evaluate(const SpectralDensity& d, double xi) {
    if (!(xi >= 0)) throw DomainError("spectral density evaluated at negative frequency");
    return std::visit(
        [xi](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DiscreteBath>) {
                throw DomainError("a discrete bath has no pointwise spectral density");
            } else {
                return v(xi);
            }
        },
        d);
}

namespace detail {

// Integrates rho(xi) * k(xi) over [a, b]. When a == 0 the first panel is
// integrated in u = sqrt(xi) so algebraic behaviour at the origin is smooth.
template <class Rho, class K>
IntegralResult integrate_product(const Rho& rho, const K& k, double a, double b,
                                 std::vector<double> interior, const QuadratureSettings& q) {
    std::vector<double> xs{a};
    std::sort(interior.begin(), interior.end());
    for (double p : interior)
        if (p > a && p < b && p > xs.back()) xs.push_back(p);
    xs.push_back(b);
    if (!(b > a)) return {};

    if (a != 0.0) {
        auto f = [&](double x) { return rho(x) * k(x); };
        return integrate_adaptive(f, std::span<const double>(xs), q);
    }

    // t in [0, r] maps to xi = t^2, beyond r the map is a shift.
    const double x1 = xs[1];
    const double r = std::sqrt(x1);
    auto to_xi = [r, x1](double t) { return t <= r ? t * t : x1 + (t - r); };
    auto f = [&](double t) {
        const double xi = to_xi(t);
        const double jac = t <= r ? 2.0 * t : 1.0;
        if (jac == 0.0) return 0.0;
        return rho(xi) * k(xi) * jac;
    };
    std::vector<double> ts{0.0, r};
    for (std::size_t i = 2; i < xs.size(); ++i) ts.push_back(r + (xs[i] - x1));
    return integrate_adaptive(f, std::span<const double>(ts), q);
}

inline std::vector<double> sorted_points(std::span<const double> pts) {
    std::vector<double> v(pts.begin(), pts.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace detail

// Integral of I(xi) * kernel(xi) over [0, inf). Power-law densities are
// truncated at omega_c (s + 40); the tail bound is folded into the error.
template <class Kernel>
IntegralResult weighted_integral(const SpectralDensity& density, const Kernel& kernel,
                                 std::span<const double> singular_points, const QuadratureSettings& q) {
    q.validate();
    const auto pts = detail::sorted_points(singular_points);
    const RemovableGuard<const Kernel&> guarded(kernel, pts);
    const bool guard = q.singularity == SingularityHandling::subtract_and_limit;

    return std::visit(
        [&](const auto& d) -> IntegralResult {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, DiscreteBath>) {
                KahanSum s;
                for (const auto& m : d.modes()) s += m.coupling * m.coupling * guarded(m.frequency);
                return {s.value(), 0.0, static_cast<long>(d.size())};
            } else {
                double lo = 0.0, hi = 0.0;
                std::vector<double> interior = pts;
                if constexpr (std::is_same_v<T, PowerLawDensity>) {
                    hi = d.upper_limit();
                } else {
                    if (d.nodes().empty()) return {};
                    lo = d.nodes().front();
                    hi = d.nodes().back();
                    interior.insert(interior.end(), d.nodes().begin(), d.nodes().end());
                }
                IntegralResult r = guard ? detail::integrate_product(d, guarded, lo, hi, interior, q)
                                         : detail::integrate_product(d, kernel, lo, hi, interior, q);
                if constexpr (std::is_same_v<T, PowerLawDensity>) {
                    const double tail = d(hi) * std::abs(kernel(hi)) * d.cutoff;
                    if (std::isfinite(tail)) r.error += tail;
                }
                return r;
            }
        },
        density);
}

template <class Kernel>
IntegralResult weighted_integral(const SpectralDensity& density, const Kernel& kernel,
                                 std::initializer_list<double> singular_points, const QuadratureSettings& q) {
    const std::vector<double> v(singular_points);
    return weighted_integral(density, kernel, std::span<const double>(v), q);
}

inline IntegralResult reorganization_energy_numeric(const SpectralDensity& density, const QuadratureSettings& q = {}) {
    if (const auto* t = std::get_if<TabulatedDensity>(&density)) {
        if (!t->nodes().empty() && t->nodes().front() == 0.0 && t->values().front() > 0.0)
            throw DivergentIntegral("tabulated density is non-zero at the origin; reorganization energy diverges");
    }
    if (const auto* p = std::get_if<PowerLawDensity>(&density); p && p->exponent <= 0)
        throw DivergentIntegral("power-law reorganization energy diverges for s <= 0");
    auto inv = [](double xi) { return 1.0 / xi; };
    return weighted_integral(density, inv, {}, q);
}

inline IntegralResult reorganization_energy(const SpectralDensity& density, const QuadratureSettings& q = {}) {
    if (const auto* p = std::get_if<PowerLawDensity>(&density)) {
        if (p->exponent <= 0) throw DivergentIntegral("power-law reorganization energy diverges for s <= 0");
        p->validate();
        return {p->strength * p->cutoff * gamma_fn(p->exponent), 0.0, 0};
    }
    if (const auto* b = std::get_if<DiscreteBath>(&density)) {
        KahanSum s;
        for (const auto& m : b->modes()) s += m.coupling * m.coupling / m.frequency;
        return {s.value(), 0.0, static_cast<long>(b->size())};
    }
    return reorganization_energy_numeric(density, q);
}

enum class DiscretizationStrategy { equal_weight, linear_grid };

namespace detail {

inline IntegralResult density_moment(const SpectralDensity& d, int moment, double a, double b,
                                     const QuadratureSettings& q) {
    return std::visit(
        [&](const auto& v) -> IntegralResult {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DiscreteBath>) {
                throw DomainError("cannot discretize an already discrete bath");
            } else {
                std::vector<double> interior;
                if constexpr (std::is_same_v<T, TabulatedDensity>)
                    interior.assign(v.nodes().begin(), v.nodes().end());
                auto k = [moment](double xi) { return moment == 0 ? 1.0 : xi; };
                return integrate_product(v, k, a, b, interior, q);
            }
        },
        d);
}

}  // namespace detail

// Each cell contributes one mode: coupling^2 is the cell integral of I, the
// frequency is the cell centroid.
inline DiscreteBath discretize(const SpectralDensity& density, int K, double xi_max,
                               DiscretizationStrategy strategy, const QuadratureSettings& q = {}) {
    require(K >= 1, "modes", "need at least one mode");
    require(xi_max > 0 && std::isfinite(xi_max), "xi_max", "must be positive");
    validate(density);

    std::vector<double> edges(static_cast<std::size_t>(K) + 1, 0.0);
    std::vector<double> weight(static_cast<std::size_t>(K), 0.0);
    if (strategy == DiscretizationStrategy::linear_grid) {
        for (int k = 0; k <= K; ++k) edges[k] = xi_max * k / K;
        for (int k = 0; k < K; ++k) weight[k] = detail::density_moment(density, 0, edges[k], edges[k + 1], q).value;
    } else {
        const double total = detail::density_moment(density, 0, 0.0, xi_max, q).value;
        edges[K] = xi_max;
        double cum = 0.0;
        for (int k = 1; k < K; ++k) {
            const double target = total * k / K;
            const double a = edges[k - 1];
            auto g = [&](double x) { return cum + detail::density_moment(density, 0, a, x, q).value - target; };
            double lo = a, hi = xi_max;
            if (g(lo) >= 0) {
                edges[k] = lo;
                continue;
            }
            boost::math::tools::eps_tolerance<double> tol(50);
            std::uintmax_t it = 200;
            const auto root = boost::math::tools::toms748_solve(g, lo, hi, g(lo), g(hi), tol, it);
            edges[k] = 0.5 * (root.first + root.second);
            cum += detail::density_moment(density, 0, a, edges[k], q).value;
        }
        std::fill(weight.begin(), weight.end(), total / K);
    }

    std::vector<BathMode> modes;
    modes.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const double a = edges[k], b = edges[k + 1];
        const double w0 = detail::density_moment(density, 0, a, b, q).value;
        const double w1 = detail::density_moment(density, 1, a, b, q).value;
        const double freq = (w0 > 0 && w1 > 0) ? w1 / w0 : 0.5 * (a + b);
        modes.push_back({std::max(freq, 0.5 * (a + b) * 1e-12), std::sqrt(std::max(weight[k], 0.0))});
    }
    return DiscreteBath(std::move(modes));
}

}  // namespace cohsynth
