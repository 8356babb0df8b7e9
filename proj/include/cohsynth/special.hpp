#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace cohsynth {

inline constexpr double infinite_beta = std::numeric_limits<double>::infinity();

inline bool is_zero_temperature(double beta) { return std::isinf(beta) && beta > 0; }

// Lanczos (g = 7, n = 9) with reflection below 1/2. Positive integers up to
// 21 are returned exactly from a factorial table so that Gamma(1) == Gamma(2)
// holds bit for bit.
inline double gamma_fn(double z) {
    static constexpr std::array<double, 21> factorial{
        1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0, 362880.0,
        3628800.0, 39916800.0, 479001600.0, 6227020800.0, 87178291200.0,
        1307674368000.0, 20922789888000.0, 355687428096000.0,
        6402373705728000.0, 121645100408832000.0, 2432902008176640000.0};
    if (z > 0 && z <= 21 && z == std::floor(z)) return factorial[static_cast<std::size_t>(z) - 1];
    if (z < 0.5) return std::numbers::pi / (std::sin(std::numbers::pi * z) * gamma_fn(1.0 - z));

    static constexpr std::array<double, 9> c{
        0.99999999999980993, 676.5203681218851, -1259.1392167224028,
        771.32342877765313, -176.61502916214059, 12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    z -= 1.0;
    double x = c[0];
    for (int i = 1; i < 9; ++i) x += c[i] / (z + i);
    const double t = z + 7.5;
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * x;
}

inline double coth(double x) { return 1.0 / std::tanh(x); }

// tanh(x)/x, continuous through the origin.
inline double tanhc(double x) {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0;
    }
    if (std::isinf(x)) return 0.0;
    return std::tanh(x) / x;
}

// x coth(x), continuous through the origin.
inline double xcoth(double x) {
    if (std::abs(x) < 1e-4) return 1.0 + x * x / 3.0;
    return x / std::tanh(x);
}

inline double sech2(double x) {
    if (std::abs(x) > 350) return 0.0;
    const double c = std::cosh(x);
    return 1.0 / (c * c);
}

inline double csch2(double x) {
    const double s = std::sinh(x);
    return 1.0 / (s * s);
}

// Bose occupation 1/(e^y - 1) for y > 0.
inline double bose(double y) { return 1.0 / std::expm1(y); }

class KahanSum {
public:
    void add(double v) {
        const double y = v - carry_;
        const double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    KahanSum& operator+=(double v) {
        add(v);
        return *this;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

inline double log_sum_exp(std::span<const double> xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    KahanSum s;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s.value());
}

inline double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace cohsynth
