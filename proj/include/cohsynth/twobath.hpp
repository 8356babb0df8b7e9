#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "perturbative.hpp"
#include "quadrature.hpp"
#include "spectral.hpp"
#include "special.hpp"

namespace cohsynth {

struct TwoBathConfig {
    int M = 0;
    int N = 0;
    double omega1 = 1.0;
    double omega2 = 1.0;
    double omega = 1.0;
    double f1 = 0.0;
    double f2 = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
    SpectralDensity bath1 = PowerLawDensity{};
    SpectralDensity bath2 = PowerLawDensity{};
    double beta = 1.0;

    void validate() const {
        require(M >= 0, "M", "must be non-negative");
        require(N >= 0, "N", "must be non-negative");
        validate_frequency(omega1, "omega1");
        validate_frequency(omega2, "omega2");
        validate_frequency(omega, "omega");
        for (auto [v, name] : {std::pair{f1, "f1"}, {f2, "f2"}, {g1, "g1"}, {g2, "g2"}}) validate_coupling(v, name);
        require(beta > 0 && std::isfinite(beta), "beta", "must be positive and finite for the sector sum");
        cohsynth::validate(bath1);
        cohsynth::validate(bath2);
    }

    TwoBathConfig scaled_couplings(double eps) const {
        TwoBathConfig c = *this;
        c.f1 *= eps;
        c.f2 *= eps;
        c.g1 *= eps;
        c.g2 *= eps;
        return c;
    }
};

struct ReorganizationPair {
    double Omega;
    double Upsilon;
};

inline ReorganizationPair reorganization_energies(const TwoBathConfig& cfg, const QuadratureSettings& q = {}) {
    return {reorganization_energy(cfg.bath1, q).value, reorganization_energy(cfg.bath2, q).value};
}

struct SectorFrame {
    int m = 0;
    int n = 0;
    double log_binomial = 0.0;
    double log_boltzmann = 0.0;
    double omega_mn = 0.0;
    double R = 1.0;
    double sin_theta = 0.0;
    double cos_theta = 1.0;

    double weight() const { return std::exp(log_binomial); }

    // Frame with a given field magnitude and tilt; used for kernel-level checks.
    static SectorFrame from_field(double R, double theta) {
        require(R > 0, "R", "must be positive");
        require(std::abs(theta) < std::numbers::pi / 2, "theta", "cos(theta) must be positive");
        SectorFrame f;
        f.R = R;
        f.sin_theta = std::sin(theta);
        f.cos_theta = std::cos(theta);
        f.omega_mn = R * f.sin_theta;
        return f;
    }
};

inline SectorFrame sector_frame(const TwoBathConfig& cfg, const ReorganizationPair& e, int m, int n) {
    if (m < 0 || m > cfg.M || n < 0 || n > cfg.N) throw DomainError("sector index out of range");
    const double km = cfg.M - 2.0 * m, kn = cfg.N - 2.0 * n;
    SectorFrame f;
    f.m = m;
    f.n = n;
    f.log_binomial = log_binomial(cfg.M, m) + log_binomial(cfg.N, n);
    f.log_boltzmann = -cfg.beta * (0.5 * cfg.omega1 * km + 0.5 * cfg.omega2 * kn) +
                      cfg.beta * (e.Omega * cfg.f1 * cfg.f1 * km * km + e.Upsilon * cfg.g1 * cfg.g1 * kn * kn);
    f.omega_mn = 4.0 * cfg.f1 * cfg.f2 * e.Omega * km + 4.0 * cfg.g1 * cfg.g2 * e.Upsilon * kn;
    f.R = std::hypot(cfg.omega, f.omega_mn);
    f.sin_theta = f.omega_mn / f.R;
    f.cos_theta = cfg.omega / f.R;
    return f;
}

inline SectorFrame sector_frame(const TwoBathConfig& cfg, int m, int n, const QuadratureSettings& q = {}) {
    return sector_frame(cfg, reorganization_energies(cfg, q), m, n);
}

// Coefficients of 1, sigma_z, sigma_x, sigma_y in the ordered double integral
// of phi * Sigma(tau) Sigma(tau'). `lower` = A - B, `upper_scaled` =
// e^{-beta R}(A + B) and `cross` = C - D_im stay finite for any beta R.
struct TauCoefficients {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
    double D_im = 0.0;
    double lower = 0.0;
    double upper_scaled = 0.0;
    double cross = 0.0;
};

namespace detail {

// (e^z - 1 - z) / z^2
inline double p2(double z) {
    if (std::abs(z) < 1e-2) return 0.5 + z * (1.0 / 6 + z * (1.0 / 24 + z * (1.0 / 120 + z / 720)));
    return (std::expm1(z) - z) / (z * z);
}

// (e^{a beta} - 1) / a
inline double e_int(double a, double beta) {
    if (std::abs(a * beta) < 1e-12) return beta;
    return std::expm1(a * beta) / a;
}

// n P(kappa) with n = 1/(e^{beta xi} - 1), P(k) = int_0^beta (beta-u) e^{k u} du,
// scaled by e^{-beta shift}. Written so that n e^{beta xi} = n + 1 absorbs growth.
inline double bose_weighted_p(double xi, double kappa, double beta, double shift, double n) {
    const double z = kappa * beta;
    if (z > 1.0) {
        // n e^{z} e^{-beta shift} = (n+1) e^{(kappa - xi - shift) beta}
        const double grow = (n + 1.0) * std::exp((kappa - xi - shift) * beta);
        return (grow - n * (1.0 + z) * std::exp(-shift * beta)) / (kappa * kappa);
    }
    return n * beta * beta * p2(z) * std::exp(-shift * beta);
}

inline double plain_weighted_p(double kappa, double beta, double shift, double w) {
    const double z = kappa * beta;
    if (z > 1.0) return w * (std::exp((kappa - shift) * beta) - (1.0 + z) * std::exp(-shift * beta)) / (kappa * kappa);
    return w * beta * beta * p2(z) * std::exp(-shift * beta);
}

inline double cross_integral_quadrature(double xi, double R, double beta) {
    auto phi = [=](double u) { return kernel_phi(xi, u, beta); };
    auto f = [=](double u) { return phi(u) * std::expm1(-R * u) * std::expm1(-R * (beta - u)); };
    QuadratureSettings q;
    q.rel_tol = 1e-13;
    q.abs_tol = 1e-300;
    return integrate_adaptive(f, 0.0, beta, q).value;
}

}  // namespace detail

inline TauCoefficients tau_coefficients(double xi, const SectorFrame& frame, double beta) {
    if (!(xi > 0)) throw DomainError("tau_coefficients requires xi > 0");
    require(beta > 0 && std::isfinite(beta), "beta", "must be positive and finite");
    const double R = frame.R, c = frame.cos_theta, s = frame.sin_theta;
    const double c2 = c * c, s2 = s * s;
    const double n = bose(beta * xi);
    const double np1 = n + 1.0;
    const double eR = std::exp(-beta * R);

    TauCoefficients t;
    t.lower = c2 * (detail::bose_weighted_p(xi, xi - R, beta, 0.0, n) +
                    detail::plain_weighted_p(-xi - R, beta, 0.0, np1)) +
              s2 * beta / xi;
    t.upper_scaled = c2 * (detail::bose_weighted_p(xi, xi + R, beta, R, n) +
                           detail::plain_weighted_p(R - xi, beta, R, np1)) +
                     s2 * beta * eR / xi;

    double W;
    if (beta * R < 0.05) {
        W = detail::cross_integral_quadrature(xi, R, beta);
    } else {
        // n-branch and (n+1)-branch of int phi (1 - e^{-Ru})(1 - e^{-R(beta-u)}) du
        const double n_xi = 1.0 / xi;
        const double n_xmR = std::abs((xi - R) * beta) < 1.0 ? n * detail::e_int(xi - R, beta)
                                                            : (np1 * eR - n) / (xi - R);
        const double n_xpR = (np1 - n * eR) / (xi + R);
        const double branch_n = n_xi - n_xmR - n_xpR + eR / xi;
        const double m_xi = 1.0 / xi;
        const double m_mxmR = np1 * (-std::expm1(-(xi + R) * beta)) / (xi + R);
        const double m_rmx = std::abs((R - xi) * beta) < 1.0 ? np1 * eR * detail::e_int(R - xi, beta)
                                                            : np1 * (std::exp(-xi * beta) - eR) / (R - xi);
        const double branch_m = m_xi - m_mxmR - m_rmx + eR / xi;
        W = branch_n + branch_m;
    }
    t.cross = s * c * W / R;

    const double grow = std::exp(beta * R);
    t.A = 0.5 * (t.lower + t.upper_scaled * grow);
    t.B = 0.5 * (t.upper_scaled * grow - t.lower);
    t.C = 0.5 * t.cross * (1.0 + grow);
    t.D_im = 0.5 * t.cross * (grow - 1.0);
    return t;
}

// Literal closed-form displays; not finite at xi = R and prone to overflow.
inline TauCoefficients tau_coefficients_display(double xi, const SectorFrame& frame, double b) {
    using std::cosh;
    using std::sinh;
    const double R = frame.R, c = frame.cos_theta, s = frame.sin_theta;
    const double D2 = (xi * xi - R * R) * (xi * xi - R * R);
    const double cth = coth(0.5 * b * xi);
    const double sh2 = sinh(0.5 * b * R) * sinh(0.5 * b * R), ch2 = cosh(0.5 * b * R) * cosh(0.5 * b * R);
    TauCoefficients t;
    t.A = c * c * (b * xi * (xi * xi - R * R) + 2 * (xi * xi + R * R) * cth * sh2) / D2 -
          c * c * 2 * xi * R * sinh(b * R) / D2 + s * s * b / xi;
    t.B = c * c * ((xi * xi + R * R) * cth * sinh(b * R) - b * R * R * R * cth) / D2 +
          c * c * xi * R * (b * xi * cth - 4 * ch2) / D2;
    t.C = 2 * s * c * (xi * cth * sinh(b * R) - 2 * R * ch2) / (xi * (xi * xi - R * R));
    t.D_im = 2 * s * c * (2 * xi * cth * sh2 - R * sinh(b * R)) / (xi * (xi * xi - R * R));
    t.lower = t.A - t.B;
    t.upper_scaled = std::exp(-b * R) * (t.A + t.B);
    t.cross = t.C - t.D_im;
    return t;
}

// c_I 1 + c_x sigma_x + c_y sigma_y + c_z sigma_z
struct SpinOperatorCombo {
    using cd = std::complex<double>;
    cd c_id{0.0}, c_x{0.0}, c_y{0.0}, c_z{0.0};

    friend SpinOperatorCombo operator*(const SpinOperatorCombo& a, const SpinOperatorCombo& b) {
        const cd i{0.0, 1.0};
        SpinOperatorCombo r;
        r.c_id = a.c_id * b.c_id + a.c_x * b.c_x + a.c_y * b.c_y + a.c_z * b.c_z;
        r.c_x = a.c_id * b.c_x + a.c_x * b.c_id + i * (a.c_y * b.c_z - a.c_z * b.c_y);
        r.c_y = a.c_id * b.c_y + a.c_y * b.c_id + i * (a.c_z * b.c_x - a.c_x * b.c_z);
        r.c_z = a.c_id * b.c_z + a.c_z * b.c_id + i * (a.c_x * b.c_y - a.c_y * b.c_x);
        return r;
    }
    friend SpinOperatorCombo operator+(SpinOperatorCombo a, const SpinOperatorCombo& b) {
        a.c_id += b.c_id;
        a.c_x += b.c_x;
        a.c_y += b.c_y;
        a.c_z += b.c_z;
        return a;
    }
    friend SpinOperatorCombo operator*(cd k, SpinOperatorCombo a) {
        a.c_id *= k;
        a.c_x *= k;
        a.c_y *= k;
        a.c_z *= k;
        return a;
    }

    cd trace() const { return 2.0 * c_id; }
    bool is_hermitian(double tol = 1e-12) const {
        return std::abs(c_id.imag()) <= tol && std::abs(c_x.imag()) <= tol && std::abs(c_y.imag()) <= tol &&
               std::abs(c_z.imag()) <= tol;
    }
    Eigen::Matrix2cd matrix() const {
        const cd i{0.0, 1.0};
        Eigen::Matrix2cd m;
        m << c_id + c_z, c_x - i * c_y, c_x + i * c_y, c_id - c_z;
        return m;
    }
};

inline SpinOperatorCombo sigma_x_combo(double tau, const SectorFrame& frame) {
    SpinOperatorCombo s;
    s.c_x = frame.cos_theta * std::cosh(frame.R * tau);
    s.c_y = std::complex<double>(0.0, frame.cos_theta * std::sinh(frame.R * tau));
    s.c_z = -frame.sin_theta;
    return s;
}

enum class ExpansionOrder { zeroth, second };

struct PartitionResult {
    double log_value = 0.0;
    double error_estimate = 0.0;
    double value() const { return std::exp(log_value); }
};

namespace detail {

struct SectorTerms {
    double log_scale;  // log binomial + log Boltzmann + beta R / 2
    double z_bracket;
    double x_bracket;
    double error;
};

inline std::vector<SectorTerms> sector_terms(const TwoBathConfig& cfg, ExpansionOrder order,
                                             const QuadratureSettings& q) {
    cfg.validate();
    const ReorganizationPair e = reorganization_energies(cfg, q);
    std::vector<SectorTerms> out;
    out.reserve(static_cast<std::size_t>(cfg.M + 1) * (cfg.N + 1));
    for (int m = 0; m <= cfg.M; ++m) {
        for (int n = 0; n <= cfg.N; ++n) {
            const SectorFrame fr = sector_frame(cfg, e, m, n);
            const double eR = std::exp(-cfg.beta * fr.R);
            double L = 0.0, U = 0.0, W = 0.0, err = 0.0;
            if (order == ExpansionOrder::second) {
                for (auto [bath, kappa] : {std::pair{&cfg.bath1, cfg.f2}, std::pair{&cfg.bath2, cfg.g2}}) {
                    if (kappa == 0.0) continue;
                    const double k2 = kappa * kappa;
                    auto lo = [&](double xi) { return tau_coefficients(xi, fr, cfg.beta).lower; };
                    auto up = [&](double xi) { return tau_coefficients(xi, fr, cfg.beta).upper_scaled; };
                    auto cr = [&](double xi) { return tau_coefficients(xi, fr, cfg.beta).cross; };
                    const auto rl = weighted_integral(*bath, lo, {}, q);
                    const auto ru = weighted_integral(*bath, up, {}, q);
                    L += k2 * rl.value;
                    U += k2 * ru.value;
                    err += k2 * (rl.error + ru.error);
                    if (fr.sin_theta != 0.0) {
                        const auto rc = weighted_integral(*bath, cr, {}, q);
                        W += k2 * rc.value;
                        err += 2.0 * k2 * rc.error;
                    }
                }
            }
            SectorTerms t;
            t.log_scale = fr.log_binomial + fr.log_boltzmann + 0.5 * cfg.beta * fr.R;
            t.z_bracket = 1.0 + eR + L + U;
            t.x_bracket = fr.sin_theta * (1.0 - eR) + 2.0 * fr.cos_theta * W + fr.sin_theta * (L - U);
            t.error = err;
            out.push_back(t);
        }
    }
    return out;
}

}  // namespace detail

// Z / Z_B summed over sectors in log space.
inline PartitionResult partition_function(const TwoBathConfig& cfg, ExpansionOrder order,
                                          const QuadratureSettings& q = {}) {
    const auto terms = detail::sector_terms(cfg, order, q);
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) mx = std::max(mx, t.log_scale);
    KahanSum z, e;
    for (const auto& t : terms) {
        const double w = std::exp(t.log_scale - mx);
        z += w * t.z_bracket;
        e += w * t.error;
    }
    return {mx + std::log(z.value()), e.value() / z.value()};
}

struct ValidityMargin {
    std::string name;
    double scale;
    double bound;
    double ratio;
    bool pass;
};

struct ValidityReport {
    std::vector<ValidityMargin> margins;
    bool all_pass() const {
        return std::all_of(margins.begin(), margins.end(), [](const auto& m) { return m.pass; });
    }
    const ValidityMargin& at(const std::string& name) const {
        for (const auto& m : margins)
            if (m.name == name) return m;
        throw DomainError("no margin named " + name);
    }
};

inline constexpr double validity_factor = 10.0;

inline ValidityReport validity_report(const TwoBathConfig& cfg, const QuadratureSettings& q = {}) {
    const ReorganizationPair e = reorganization_energies(cfg, q);
    auto margin = [](std::string name, double scale, double bound) {
        const double ratio = bound == 0.0 ? std::numeric_limits<double>::infinity() : scale / bound;
        return ValidityMargin{std::move(name), scale, bound, ratio, ratio > validity_factor};
    };
    ValidityReport r;
    r.margins.push_back(margin("output", cfg.omega,
                               4.0 * std::abs(cfg.f1 * cfg.f2) * e.Omega * cfg.M +
                                   4.0 * std::abs(cfg.g1 * cfg.g2) * e.Upsilon * cfg.N));
    r.margins.push_back(margin("drive1", cfg.omega1, 2.0 * cfg.f1 * cfg.f1 * e.Omega * cfg.M));
    r.margins.push_back(margin("drive2", cfg.omega2, 2.0 * std::abs(cfg.g1 * cfg.g2) * e.Upsilon * cfg.N));
    r.margins.push_back(margin("drive2_symmetric", cfg.omega2, 2.0 * cfg.g1 * cfg.g1 * e.Upsilon * cfg.N));
    return r;
}

inline CoherenceResult output_coherence(const TwoBathConfig& cfg, ExpansionOrder order,
                                        const QuadratureSettings& q = {}) {
    const auto terms = detail::sector_terms(cfg, order, q);
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) mx = std::max(mx, t.log_scale);
    KahanSum num, den, err;
    for (const auto& t : terms) {
        const double w = std::exp(t.log_scale - mx);
        num += w * t.x_bracket;
        den += w * t.z_bracket;
        err += w * t.error;
    }
    const double value = num.value() / den.value();
    const bool ok = validity_report(cfg, q).at("output").pass;
    return {value, Method::sector_sum, err.value() / den.value() * (1.0 + std::abs(value)), ok};
}

inline double additive_coherence(const TwoBathConfig& cfg, const QuadratureSettings& q = {}) {
    const ReorganizationPair e = reorganization_energies(cfg, q);
    return -4.0 * std::tanh(0.5 * cfg.beta * cfg.omega) / cfg.omega *
           (cfg.f1 * cfg.f2 * e.Omega * cfg.M * std::tanh(0.5 * cfg.beta * cfg.omega1) +
            cfg.g1 * cfg.g2 * e.Upsilon * cfg.N * std::tanh(0.5 * cfg.beta * cfg.omega2));
}

// Experimental: Monte-Carlo estimate of the order-kappa^4 term of the ordered
// exponent (three pairings over tau1 > tau2 > tau3 > tau4, two frequencies).
// Frequencies are drawn from I(xi)/xi so the phi factors stay bounded.
struct Kappa4Estimate {
    SpinOperatorCombo mean;
    double std_error = 0.0;
    long samples = 0;
};

inline Kappa4Estimate kappa4_triple_pairing(const SectorFrame& frame, double beta, const SpectralDensity& bath,
                                            long samples, std::uint64_t seed) {
    require(samples >= 2, "samples", "need at least two samples");
    require(beta > 0 && std::isfinite(beta), "beta", "must be positive and finite");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    double mass = 0.0;
    std::function<double()> draw;
    if (const auto* p = std::get_if<PowerLawDensity>(&bath)) {
        p->validate();
        mass = p->strength * p->cutoff * gamma_fn(p->exponent);
        auto dist = std::make_shared<std::gamma_distribution<double>>(p->exponent, p->cutoff);
        draw = [dist, &rng] { return (*dist)(rng); };
    } else if (const auto* d = std::get_if<DiscreteBath>(&bath)) {
        std::vector<double> w;
        for (const auto& m : d->modes()) {
            w.push_back(m.coupling * m.coupling / m.frequency);
            mass += w.back();
        }
        auto dist = std::make_shared<std::discrete_distribution<std::size_t>>(w.begin(), w.end());
        draw = [dist, d, &rng] { return d->modes()[(*dist)(rng)].frequency; };
    } else {
        throw DomainError("kappa^4 estimate supports power-law and discrete baths");
    }

    const double volume = std::pow(beta, 4) / 24.0;
    Eigen::Vector4cd acc = Eigen::Vector4cd::Zero();
    Eigen::Vector4d acc2 = Eigen::Vector4d::Zero();
    for (long k = 0; k < samples; ++k) {
        std::array<double, 4> t{unit(rng) * beta, unit(rng) * beta, unit(rng) * beta, unit(rng) * beta};
        std::sort(t.begin(), t.end(), std::greater<>());
        const double x1 = draw(), x2 = draw();
        auto ph1 = [&](double a, double b) { return x1 * kernel_phi(x1, a - b, beta); };
        auto ph2 = [&](double a, double b) { return x2 * kernel_phi(x2, a - b, beta); };
        const double pairing = ph1(t[0], t[1]) * ph2(t[2], t[3]) + ph1(t[0], t[2]) * ph2(t[1], t[3]) +
                               ph1(t[0], t[3]) * ph2(t[1], t[2]);
        const SpinOperatorCombo prod = sigma_x_combo(t[0], frame) * sigma_x_combo(t[1], frame) *
                                       sigma_x_combo(t[2], frame) * sigma_x_combo(t[3], frame);
        const double scale = mass * mass * volume * pairing;
        Eigen::Vector4cd v(prod.c_id, prod.c_x, prod.c_y, prod.c_z);
        v *= scale;
        acc += v;
        acc2 += v.cwiseAbs2();
    }
    const double n = static_cast<double>(samples);
    const Eigen::Vector4cd mean = acc / n;
    const Eigen::Vector4d var = (acc2 / n - mean.cwiseAbs2()) / (n - 1.0);
    Kappa4Estimate out;
    out.mean.c_id = mean[0];
    out.mean.c_x = mean[1];
    out.mean.c_y = mean[2];
    out.mean.c_z = mean[3];
    out.std_error = std::sqrt(var.cwiseMax(0.0).sum());
    out.samples = samples;
    return out;
}

}  // namespace cohsynth
