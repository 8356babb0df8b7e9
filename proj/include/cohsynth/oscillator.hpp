#pragma once

#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "perturbative.hpp"
#include "quadrature.hpp"
#include "spectral.hpp"
#include "special.hpp"

namespace cohsynth {

struct OscillatorSystem {
    double E = 1.0;
    double omega = 1.0;
    double f = 0.0;
    double g = 0.0;
    double beta = 1.0;
    SpectralDensity bath = PowerLawDensity{};

    void validate() const {
        validate_frequency(E, "E");
        validate_frequency(omega, "omega");
        validate_coupling(f, "f");
        validate_coupling(g, "g");
        validate_beta(beta);
        cohsynth::validate(bath);
    }
};

enum class MomentPrescription { combined, principal_value };

inline double free_second_moment(double E, double beta) {
    return is_zero_temperature(beta) ? 0.5 : 0.5 * coth(0.5 * beta * E);
}

// (beta E + sinh(beta E)) / sinh^2(beta E / 2)
inline double oscillator_weight(double E, double beta) {
    if (is_zero_temperature(beta)) return 2.0;
    const double u = 0.5 * beta * E;
    const double c = csch2(u);
    return 2.0 * coth(u) + (std::isfinite(c) ? 2.0 * u * c : 0.0);
}

namespace detail {

inline double moment_first_kernel(double xi, double E, double beta) {
    const double d = E * E - xi * xi;
    const double num = is_zero_temperature(beta) ? E - xi : E * coth(0.5 * beta * xi) - xi * coth(0.5 * beta * E);
    return 2.0 * E * num / (d * d);
}

inline double moment_second_kernel(double xi, double E, double beta) {
    return -oscillator_weight(E, beta) * xi / (2.0 * E * (E * E - xi * xi));
}

}  // namespace detail

// Both g^2 integrands combined; the poles at xi = E cancel.
inline double second_moment_kernel_raw(double xi, double E, double beta) {
    if (is_zero_temperature(beta)) return (2.0 * E + xi) / (E * (E + xi) * (E + xi));
    return detail::moment_first_kernel(xi, E, beta) + detail::moment_second_kernel(xi, E, beta);
}

inline double second_moment_kernel(double xi, double E, double beta) {
    if (is_zero_temperature(beta)) return second_moment_kernel_raw(xi, E, beta);
    const double win = double_root_window * E;
    if (std::abs(xi - E) < win)
        return removable_fit([&](double x) { return second_moment_kernel_raw(x, E, beta); }, E, win, xi);
    return second_moment_kernel_raw(xi, E, beta);
}

inline double second_moment_kernel_limit(double E, double beta) {
    if (is_zero_temperature(beta)) return 0.75 / (E * E);
    const double u = 0.5 * beta * E;
    const double s = std::sinh(u);
    return (0.75 * coth(u) + 0.75 * u / (s * s) + 0.5 * u * u * std::cosh(u) / (s * s * s)) / (E * E);
}

inline double mean_displacement(const OscillatorSystem& sys, const QuadratureSettings& q = {}) {
    sys.validate();
    const double omega = reorganization_energy(sys.bath, q).value;
    const double t = is_zero_temperature(sys.beta) ? 1.0 : std::tanh(0.5 * sys.beta * sys.omega);
    return -4.0 * sys.f * sys.g / (std::numbers::sqrt2 * sys.E) * omega * t;
}

inline constexpr double principal_value_excision = 1e-6;

inline IntegralResult second_moment(const OscillatorSystem& sys, const QuadratureSettings& q = {},
                                    MomentPrescription prescription = MomentPrescription::combined) {
    sys.validate();
    const double E = sys.E, beta = sys.beta, g2 = sys.g * sys.g;
    const double base = free_second_moment(E, beta);
    if (sys.g == 0.0) return {base, 0.0, 0};

    if (prescription == MomentPrescription::combined) {
        auto k = [=](double xi) { return second_moment_kernel(xi, E, beta); };
        const IntegralResult r = weighted_integral(sys.bath, k, {E}, q);
        return {base + g2 * r.value, g2 * r.error, r.evaluations};
    }

    const double h = principal_value_excision * E;
    QuadratureSettings split = q;
    split.singularity = SingularityHandling::split_at_point;
    auto excise = [=](auto term) {
        return [=](double xi) { return std::abs(xi - E) <= h ? 0.0 : term(xi); };
    };
    auto t1 = excise([=](double xi) { return detail::moment_first_kernel(xi, E, beta); });
    auto t2 = excise([=](double xi) { return detail::moment_second_kernel(xi, E, beta); });
    const IntegralResult r1 = weighted_integral(sys.bath, t1, {E - h, E + h}, split);
    const IntegralResult r2 = weighted_integral(sys.bath, t2, {E - h, E + h}, split);
    return {base + g2 * (r1.value + r2.value), g2 * (r1.error + r2.error), r1.evaluations + r2.evaluations};
}

inline double displacement_variance(const OscillatorSystem& sys, const QuadratureSettings& q = {},
                                    MomentPrescription prescription = MomentPrescription::combined) {
    const double x = mean_displacement(sys, q);
    return second_moment(sys, q, prescription).value - x * x;
}

inline double displacement_snr(const OscillatorSystem& sys, const QuadratureSettings& q = {},
                               MomentPrescription prescription = MomentPrescription::combined) {
    const double var = displacement_variance(sys, q, prescription);
    if (!(var > 0)) throw NumericError("displacement variance is not positive");
    return std::abs(mean_displacement(sys, q)) / std::sqrt(var);
}

}  // namespace cohsynth
