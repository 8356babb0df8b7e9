#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "special.hpp"

namespace cohsynth {

enum class SingularityHandling { subtract_and_limit, split_at_point };

struct QuadratureSettings {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_subdivisions = 4000;
    SingularityHandling singularity = SingularityHandling::subtract_and_limit;

    void validate() const {
        require(rel_tol > 0 && std::isfinite(rel_tol), "rel_tol", "must be positive");
        require(abs_tol > 0 && std::isfinite(abs_tol), "abs_tol", "must be positive");
        require(max_subdivisions >= 1, "max_subdivisions", "must be at least 1");
    }
    double target(double value) const { return std::max(abs_tol, rel_tol * std::abs(value)); }
};

struct IntegralResult {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;

    IntegralResult& operator+=(const IntegralResult& o) {
        value += o.value;
        error += o.error;
        evaluations += o.evaluations;
        return *this;
    }
};

namespace detail {

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

// 21-point Kronrod rule with the embedded 10-point Gauss rule; error estimate
// follows the QUADPACK heuristic.
template <class F>
Panel gk21(F& f, double a, double b) {
    using K = boost::math::quadrature::gauss_kronrod<double, 21>;
    using G = boost::math::quadrature::gauss<double, 10>;
    const auto& x = K::abscissa();
    const auto& wk = K::weights();
    const auto& wg = G::weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);

    std::array<double, 21> fv{};
    fv[0] = f(c);
    for (std::size_t i = 1; i < x.size(); ++i) {
        fv[2 * i - 1] = f(c - h * x[i]);
        fv[2 * i] = f(c + h * x[i]);
    }
    double rk = fv[0] * wk[0], rg = 0.0, rabs = std::abs(rk);
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double s = fv[2 * i - 1] + fv[2 * i];
        rk += s * wk[i];
        rabs += (std::abs(fv[2 * i - 1]) + std::abs(fv[2 * i])) * wk[i];
        if (i % 2 == 1) rg += s * wg[i / 2];
    }
    const double mean = 0.5 * rk;
    double rasc = wk[0] * std::abs(fv[0] - mean);
    for (std::size_t i = 1; i < x.size(); ++i)
        rasc += wk[i] * (std::abs(fv[2 * i - 1] - mean) + std::abs(fv[2 * i] - mean));

    double err = std::abs((rk - rg) * h);
    rasc *= std::abs(h);
    rabs *= std::abs(h);
    if (rasc != 0.0 && err != 0.0) err = rasc * std::min(1.0, std::pow(200.0 * err / rasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (rabs > std::numeric_limits<double>::min() / (50 * eps)) err = std::max(err, 50 * eps * rabs);
    if (!std::isfinite(rk)) throw NumericError("non-finite integrand value on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
    return {a, b, rk * h, err};
}

}  // namespace detail

// Globally adaptive integration over consecutive breakpoints.
template <class F>
IntegralResult integrate_adaptive(F&& f, std::span<const double> breaks, const QuadratureSettings& q) {
    IntegralResult out;
    if (breaks.size() < 2) return out;

    std::priority_queue<detail::Panel> heap;
    std::vector<detail::Panel> frozen;
    double total = 0.0, total_err = 0.0;
    auto push = [&](const detail::Panel& p) {
        heap.push(p);
        total += p.value;
        total_err += p.error;
        out.evaluations += 21;
    };
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        if (breaks[i + 1] > breaks[i]) push(detail::gk21(f, breaks[i], breaks[i + 1]));

    long panels = static_cast<long>(heap.size());
    while (!heap.empty() && total_err > q.target(total) && panels < q.max_subdivisions) {
        const detail::Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b) ||
            worst.b - worst.a < 64 * std::numeric_limits<double>::epsilon() * std::max(std::abs(worst.a), std::abs(worst.b))) {
            frozen.push_back(worst);
            continue;
        }
        total -= worst.value;
        total_err -= worst.error;
        push(detail::gk21(f, worst.a, mid));
        push(detail::gk21(f, mid, worst.b));
        ++panels;
    }

    std::vector<detail::Panel> all = std::move(frozen);
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
    KahanSum v, e;
    for (const auto& p : all) {
        v += p.value;
        e += p.error;
    }
    out.value = v.value();
    out.error = e.value();
    if (out.error > q.target(out.value))
        throw ToleranceNotMet("adaptive quadrature did not reach tolerance", out.value, out.error);
    return out;
}

template <class F>
IntegralResult integrate_adaptive(F&& f, double a, double b, const QuadratureSettings& q) {
    const std::array<double, 2> br{a, b};
    return integrate_adaptive(std::forward<F>(f), std::span<const double>(br), q);
}

// Least-squares quadratic through k(p +- w), k(p +- 2w), evaluated at x.
template <class K>
double removable_fit(const K& k, double p, double w, double x) {
    const double f1 = k(p - w), f2 = k(p + w), f3 = k(p - 2 * w), f4 = k(p + 2 * w);
    const double c0 = (4.0 * (f1 + f2) - (f3 + f4)) / 6.0;
    const double c1 = ((f2 - f1) + 2.0 * (f4 - f3)) / (10.0 * w);
    const double c2 = ((f3 + f4) - (f1 + f2)) / (6.0 * w * w);
    const double d = x - p;
    return c0 + c1 * d + c2 * d * d;
}

// Evaluates k directly except inside |x - p| < window * |p| for each listed
// point, where the local quadratic fit is used instead.
template <class K>
class RemovableGuard {
public:
    RemovableGuard(K k, std::vector<double> points, double window = 1e-6)
        : k_(std::move(k)), points_(std::move(points)), window_(window) {}

    double operator()(double x) const {
        for (double p : points_) {
            const double w = window_ * std::abs(p);
            if (w > 0 && std::abs(x - p) < w) return removable_fit(k_, p, w, x);
        }
        return k_(x);
    }

private:
    K k_;
    std::vector<double> points_;
    double window_;
};

// Window widths for simple and double removable roots.
inline constexpr double simple_root_window = 1e-6;
inline constexpr double double_root_window = 1e-3;

}  // namespace cohsynth
