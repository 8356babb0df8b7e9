#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "quadrature.hpp"
#include "spectral.hpp"
#include "special.hpp"

namespace cohsynth {

enum class Method { closed_form, quadrature, sector_sum, oracle, monte_carlo };

constexpr std::string_view to_string(Method m) {
    switch (m) {
        case Method::closed_form: return "closed-form";
        case Method::quadrature: return "quadrature";
        case Method::sector_sum: return "sector-sum";
        case Method::oracle: return "oracle";
        case Method::monte_carlo: return "monte-carlo";
    }
    return "unknown";
}

struct CoherenceResult {
    double value = 0.0;
    Method method = Method::closed_form;
    double error_estimate = 0.0;
    bool regime_valid = true;

    // Perturbative values beyond the physical bound signal a regime violation.
    bool exceeds_unit_bound() const { return std::abs(value) > 1.0; }
};

inline void validate_beta(double beta) {
    require(beta > 0, "beta", "must be positive (infinity requests the zero-temperature limit)");
}

inline void validate_frequency(double w, const char* field) {
    require(w > 0 && std::isfinite(w), field, "must be positive and finite");
}

inline void validate_coupling(double f, const char* field) { require(std::isfinite(f), field, "must be finite"); }

inline Method method_for(const SpectralDensity& bath) {
    return std::holds_alternative<TabulatedDensity>(bath) ? Method::quadrature : Method::closed_form;
}

// ---------------------------------------------------------------- kernels

inline double kernel_phi(double xi, double dtau, double beta) {
    if (!(xi > 0)) throw DomainError("kernel_phi requires xi > 0");
    if (dtau < 0 || dtau > beta) throw DomainError("kernel_phi requires 0 <= dtau <= beta");
    const double denom = -std::expm1(-beta * xi);
    if (is_zero_temperature(beta)) return std::exp(-dtau * xi);
    return (std::exp(-(beta - dtau) * xi) + std::exp(-dtau * xi)) / denom;
}

// Thermal Green's function; the sign bit of dtau selects the branch at zero.
inline double kernel_green(double xi, double dtau, double beta) {
    if (!(xi > 0)) throw DomainError("kernel_green requires xi > 0");
    if (std::abs(dtau) > beta) throw DomainError("kernel_green requires |dtau| <= beta");
    const double denom = -std::expm1(-beta * xi);
    if (!std::signbit(dtau)) {
        if (is_zero_temperature(beta)) return 0.0;
        return std::exp(-(beta - dtau) * xi) / denom;
    }
    return std::exp(dtau * xi) / denom;
}

// xi coth(beta xi / 2), finite at xi = 0.
inline double xi_coth(double xi, double beta) {
    if (is_zero_temperature(beta)) return xi;
    return (2.0 / beta) * xcoth(0.5 * beta * xi);
}

inline double self_induced_kernel_raw(double xi, double w, double beta) {
    if (is_zero_temperature(beta)) return 1.0 / (xi * (xi + w));
    return (xi_coth(xi, beta) - xi_coth(w, beta)) / (xi * (xi * xi - w * w));
}

// Near xi = w the difference of xi coth terms is divided by (xi - w) analytically.
inline double self_induced_kernel(double xi, double w, double beta) {
    const double d = 0.5 * beta * (xi - w);
    if (is_zero_temperature(beta) || std::abs(d) >= 1.0 || std::abs(xi - w) >= 0.1 * w)
        return self_induced_kernel_raw(xi, w, beta);
    const double a = 0.5 * beta * xi, b = 0.5 * beta * w;
    auto csch = [](double x) { return -2.0 * std::exp(-x) / std::expm1(-2.0 * x); };
    const double sinhc = d == 0.0 ? 1.0 : std::sinh(d) / d;
    const double slope = coth(a) - b * sinhc * csch(a) * csch(b);
    return slope / (xi * (xi + w));
}

// Closed-form value of the self-induced kernel at xi = w.
inline double self_induced_kernel_limit(double w, double beta) {
    if (is_zero_temperature(beta)) return 0.5 / (w * w);
    const double u = 0.5 * beta * w;
    return (0.5 * coth(u) - 0.5 * u * csch2(u)) / (w * w);
}

// ------------------------------------------------------------ single spin

struct SelfInducedSystem {
    double omega1 = 1.0;
    double f1 = 0.0;
    double f2 = 0.0;
    double beta = 1.0;

    void validate() const {
        validate_frequency(omega1, "omega1");
        validate_coupling(f1, "f1");
        validate_coupling(f2, "f2");
        validate_beta(beta);
    }
};

inline CoherenceResult self_induced_coherence(const SelfInducedSystem& sys, const SpectralDensity& bath,
                                              const QuadratureSettings& q = {}) {
    sys.validate();
    validate(bath);
    const Method method = std::holds_alternative<DiscreteBath>(bath) ? Method::closed_form : Method::quadrature;
    if (sys.f1 == 0.0 || sys.f2 == 0.0) return {0.0, method, 0.0, true};
    const double w = sys.omega1, beta = sys.beta;
    auto k = [w, beta](double xi) { return self_induced_kernel(xi, w, beta); };
    const IntegralResult r = weighted_integral(bath, k, {w}, q);
    const double pref = -4.0 * sys.f1 * sys.f2 * std::tanh(0.5 * beta * w);
    return {pref * r.value, method, std::abs(pref) * r.error, true};
}

// --------------------------------------------------------------- two spin

struct TwoSpinSystem {
    double omega1 = 1.0;
    double omega2 = 1.0;
    double f1 = 0.0;
    double f2 = 0.0;
    double beta = 1.0;

    void validate() const {
        validate_frequency(omega1, "omega1");
        validate_frequency(omega2, "omega2");
        validate_coupling(f1, "f1");
        validate_coupling(f2, "f2");
        validate_beta(beta);
    }
    bool perturbative(double reorganization) const {
        return omega2 > 10.0 * 4.0 * std::abs(f1 * f2) * reorganization;
    }
};

enum class OmegaRoute { closed_form, quadrature };

inline CoherenceResult two_spin_coherence(const TwoSpinSystem& sys, const SpectralDensity& bath,
                                          const QuadratureSettings& q = {},
                                          OmegaRoute route = OmegaRoute::closed_form) {
    sys.validate();
    validate(bath);
    const IntegralResult omega =
        route == OmegaRoute::closed_form ? reorganization_energy(bath, q) : reorganization_energy_numeric(bath, q);
    const double pref = -4.0 * sys.f1 * sys.f2 * std::tanh(0.5 * sys.beta * sys.omega1) *
                        std::tanh(0.5 * sys.beta * sys.omega2) / sys.omega2;
    const Method m = route == OmegaRoute::quadrature ? Method::quadrature : method_for(bath);
    return {pref * omega.value, m, std::abs(pref) * omega.error, sys.perturbative(omega.value)};
}

struct ResonantPair {
    CoherenceResult self;
    CoherenceResult transfer;
    double ratio() const { return transfer.value / self.value; }
};

inline ResonantPair resonant_pair(double omega, double f1, double f2, double beta, const SpectralDensity& bath,
                                  const QuadratureSettings& q = {}) {
    return {self_induced_coherence({omega, f1, f2, beta}, bath, q),
            two_spin_coherence({omega, omega, f1, f2, beta}, bath, q)};
}

// Dimensionless ratio <s2x>/<s1x> in units omega1 = 1: w = omega2/omega1,
// b = beta omega1, r = omega1/omega_c. The denominator is the self-induced
// integral, which depends on b only.
inline IntegralResult ratio_denominator(double b, double s, double r, const QuadratureSettings& q = {}) {
    require(b > 0, "beta_omega1", "must be positive");
    require(s > 0, "s", "must be positive");
    require(r > 0, "omega1_over_omegac", "must be positive");
    const SpectralDensity bath = PowerLawDensity{1.0, s, 1.0 / r};
    auto k = [b](double xi) { return self_induced_kernel(xi, 1.0, b); };
    return weighted_integral(bath, k, {1.0}, q);
}

inline double ratio_numerator(double w, double b, double s, double r) {
    if (is_zero_temperature(b)) return gamma_fn(s) / (r * w);
    return 0.5 * b * tanhc(0.5 * b * w) * gamma_fn(s) / r;
}

inline double coherence_ratio(double w, double b, double s, double r, const QuadratureSettings& q = {}) {
    require(w >= 0 && std::isfinite(w), "omega2_over_omega1", "must be non-negative");
    require(b >= 0, "beta_omega1", "must be non-negative");
    require(s > 0, "s", "must be positive");
    require(r > 0, "omega1_over_omegac", "must be positive");
    if (b == 0.0) return 3.0;
    return ratio_numerator(w, b, s, r) / ratio_denominator(b, s, r, q).value;
}

inline Matrix coherence_ratio_grid(std::span<const double> w, std::span<const double> b, double s, double r,
                                   const QuadratureSettings& q = {}, unsigned threads = 1) {
    // The self-induced denominator depends only on b, so it is integrated once per column.
    std::vector<double> denom(b.size(), 0.0);
    parallel_for(b.size(), threads, [&](std::size_t j) {
        require(b[j] >= 0, "beta_omega1", "must be non-negative");
        if (b[j] == 0.0) return;
        denom[j] = ratio_denominator(b[j], s, r, q).value;
    });
    Matrix out(w.size(), b.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        require(w[i] >= 0, "omega2_over_omega1", "must be non-negative");
        for (std::size_t j = 0; j < b.size(); ++j)
            out(i, j) = b[j] == 0.0 ? 3.0 : ratio_numerator(w[i], b[j], s, r) / denom[j];
    }
    return out;
}

// <s2x> / (-4 f1 f2 lambda) in units omega1 = 1.
inline double normalized_two_spin(double w, double b, double s, double r) {
    require(w >= 0, "omega2_over_omega1", "must be non-negative");
    require(b >= 0, "beta_omega1", "must be non-negative");
    require(s > 0, "s", "must be positive");
    require(r > 0, "omega1_over_omegac", "must be positive");
    return std::tanh(0.5 * b) * 0.5 * b * tanhc(0.5 * b * w) * gamma_fn(s) / r;
}

// ---------------------------------------------------------- multi-drive

struct DriveSpin {
    double frequency;
    double coupling;
};

struct OutputSpin {
    double frequency;
    double coupling;
};

struct MultiDriveSystem {
    std::vector<DriveSpin> drives;
    std::vector<OutputSpin> outputs;
    double beta = 1.0;

    void validate() const {
        require(!drives.empty(), "drives", "need at least one drive spin");
        require(!outputs.empty(), "outputs", "need at least one output spin");
        for (const auto& d : drives) {
            validate_frequency(d.frequency, "drives");
            validate_coupling(d.coupling, "drives");
        }
        for (const auto& o : outputs) {
            validate_frequency(o.frequency, "outputs");
            validate_coupling(o.coupling, "outputs");
        }
        validate_beta(beta);
    }
};

inline CoherenceResult synthesized_from_drive_sum(double drive_sum, double drive_abs, double omega_out, double f2,
                                                  double beta, const SpectralDensity& bath, const QuadratureSettings& q,
                                                  double extra_error = 0.0) {
    const IntegralResult omega = reorganization_energy(bath, q);
    const double pref = -4.0 * f2 * std::tanh(0.5 * beta * omega_out) / omega_out;
    const double value = pref * drive_sum * omega.value;
    const double err = std::abs(pref) * (std::abs(drive_sum) * omega.error + extra_error * omega.value);
    return {value, method_for(bath), err, omega_out > 40.0 * std::abs(f2) * drive_abs * omega.value};
}

inline CoherenceResult synthesized_coherence(const MultiDriveSystem& sys, const SpectralDensity& bath,
                                             const QuadratureSettings& q = {}, std::size_t output = 0) {
    sys.validate();
    validate(bath);
    require(output < sys.outputs.size(), "output", "index out of range");
    KahanSum sum, abs_sum;
    for (const auto& d : sys.drives) {
        sum += d.coupling * std::tanh(0.5 * sys.beta * d.frequency);
        abs_sum += std::abs(d.coupling);
    }
    const auto& o = sys.outputs[output];
    return synthesized_from_drive_sum(sum.value(), abs_sum.value(), o.frequency, o.coupling, sys.beta, bath, q);
}

enum class DensityMode { exact, high_frequency };

// f1(omega) as weighted atoms or as a piecewise-linear table.
class CouplingDensity {
public:
    static CouplingDensity atoms(std::vector<DriveSpin> drives) {
        for (const auto& d : drives) {
            validate_frequency(d.frequency, "coupling_density");
            validate_coupling(d.coupling, "coupling_density");
        }
        CouplingDensity c;
        c.rep_ = std::move(drives);
        return c;
    }

    static CouplingDensity tabulated(std::vector<double> omega, std::vector<double> f1) {
        require(omega.size() == f1.size() && omega.size() >= 2, "coupling_density", "need matching samples, at least two");
        for (std::size_t i = 0; i < omega.size(); ++i) {
            require(std::isfinite(omega[i]) && omega[i] >= 0, "coupling_density", "frequencies must be non-negative");
            require(std::isfinite(f1[i]), "coupling_density", "weights must be finite");
            if (i > 0) require(omega[i] > omega[i - 1], "coupling_density", "frequencies must be strictly increasing");
        }
        CouplingDensity c;
        c.rep_ = Table{std::move(omega), std::move(f1)};
        return c;
    }

    // Sum (or integral) of f1 tanh(beta omega / 2), or of f1 over omega > 2/beta.
    IntegralResult drive_sum(double beta, DensityMode mode, const QuadratureSettings& q) const {
        const double cut = is_zero_temperature(beta) ? 0.0 : 2.0 / beta;
        if (const auto* a = std::get_if<std::vector<DriveSpin>>(&rep_)) {
            KahanSum s;
            for (const auto& d : *a) {
                if (mode == DensityMode::exact) s += d.coupling * std::tanh(0.5 * beta * d.frequency);
                else if (d.frequency > cut) s += d.coupling;
            }
            return {s.value(), 0.0, 0};
        }
        const auto& t = std::get<Table>(rep_);
        auto f = [&t](double w) { return t(w); };
        if (mode == DensityMode::exact) {
            auto g = [&](double w) { return f(w) * std::tanh(0.5 * beta * w); };
            return integrate_adaptive(g, std::span<const double>(t.x), q);
        }
        std::vector<double> br{std::max(cut, t.x.front())};
        for (double x : t.x)
            if (x > br.back()) br.push_back(x);
        if (br.size() < 2) return {};
        return integrate_adaptive(f, std::span<const double>(br), q);
    }

    double total_abs_weight(const QuadratureSettings& q) const {
        if (const auto* a = std::get_if<std::vector<DriveSpin>>(&rep_)) {
            double s = 0;
            for (const auto& d : *a) s += std::abs(d.coupling);
            return s;
        }
        const auto& t = std::get<Table>(rep_);
        auto g = [&t](double w) { return std::abs(t(w)); };
        return integrate_adaptive(g, std::span<const double>(t.x), q).value;
    }

private:
    struct Table {
        std::vector<double> x, y;
        double operator()(double w) const {
            if (w < x.front() || w > x.back()) return 0.0;
            const auto it = std::upper_bound(x.begin(), x.end(), w);
            if (it == x.end()) return y.back();
            const auto j = static_cast<std::size_t>(it - x.begin());
            const double t = (w - x[j - 1]) / (x[j] - x[j - 1]);
            return y[j - 1] + t * (y[j] - y[j - 1]);
        }
    };
    std::variant<std::vector<DriveSpin>, Table> rep_;
};

inline CoherenceResult synthesized_coherence_density(const CouplingDensity& density, double omega_out, double f2,
                                                     double beta, const SpectralDensity& bath, DensityMode mode,
                                                     const QuadratureSettings& q = {}) {
    validate_frequency(omega_out, "omega_out");
    validate_coupling(f2, "f2");
    validate_beta(beta);
    validate(bath);
    const IntegralResult s = density.drive_sum(beta, mode, q);
    return synthesized_from_drive_sum(s.value, density.total_abs_weight(q), omega_out, f2, beta, bath, q, s.error);
}

// ---------------------------------------------------- sigma_z correction

inline double sigma_z_kernel_raw(double xi, double w, double beta) {
    const double d = xi * xi - w * w;
    if (is_zero_temperature(beta)) return 2.0 / ((xi + w) * (xi + w));
    const double u = 0.5 * beta * w;
    const double sh = 2.0 * u * sech2(u);
    const double num = coth(0.5 * beta * xi) * (sh * d + 2.0 * (xi * xi + w * w) * std::tanh(u)) - 4.0 * xi * w;
    return num / (d * d);
}

inline double sigma_z_kernel(double xi, double w, double beta) {
    const double win = double_root_window * w;
    if (std::abs(xi - w) < win)
        return removable_fit([&](double x) { return sigma_z_kernel_raw(x, w, beta); }, w, win, xi);
    return sigma_z_kernel_raw(xi, w, beta);
}

inline double sigma_z_kernel_limit(double w, double beta) {
    if (is_zero_temperature(beta)) return 0.5 / (w * w);
    const double u = 0.5 * beta * w;
    return (1.0 + (2.0 * u * u - u * coth(u)) * sech2(u)) / (2.0 * w * w);
}

struct PolarizationCorrection {
    double correction = 0.0;
    double baseline = 0.0;
    double error_estimate = 0.0;
    double total() const { return baseline + correction; }
};

inline PolarizationCorrection sigma_z_correction(double omega_out, double f2, double beta, const SpectralDensity& bath,
                                                 const QuadratureSettings& q = {}) {
    validate_frequency(omega_out, "omega_out");
    validate_coupling(f2, "f2");
    validate_beta(beta);
    validate(bath);
    const double baseline = -std::tanh(0.5 * beta * omega_out);
    if (f2 == 0.0) return {0.0, baseline, 0.0};
    auto k = [omega_out, beta](double xi) { return sigma_z_kernel(xi, omega_out, beta); };
    const IntegralResult r = weighted_integral(bath, k, {omega_out}, q);
    return {f2 * f2 * r.value, baseline, f2 * f2 * r.error};
}

// ------------------------------------------------------------ multiplexing

inline double p_tanh(double u, double beta) {
    return is_zero_temperature(beta) ? u : u * std::tanh(0.5 * beta * u);
}

// p'(x) / (2x) with p(u) = u tanh(beta u / 2).
inline double p_tanh_slope(double x, double beta) {
    if (is_zero_temperature(beta)) return 0.5 / x;
    const double h = 0.5 * beta * x;
    return 0.25 * beta * (tanhc(h) + sech2(h));
}

inline bool degenerate_pair(double x, double y) { return std::abs(x - y) <= 1e-5 * (x + y); }

inline double correlation_kernel_degenerate_raw(double xi, double x, double beta) {
    if (is_zero_temperature(beta)) return xi * (xi + 2 * x) / (2 * x * (xi + x) * (xi + x));
    const double d = xi * xi - x * x;
    const double t = std::tanh(0.5 * beta * x);
    const double first = x * x * xi_coth(xi, beta) * t * t / (d * d);
    const double second = xi * xi * (p_tanh_slope(x, beta) * d - p_tanh(x, beta)) / (d * d);
    return first + second;
}

inline double correlation_kernel_raw(double xi, double x, double y, double beta) {
    if (is_zero_temperature(beta)) return xi * (xi + x + y) / ((x + y) * (xi + x) * (xi + y));
    if (degenerate_pair(x, y)) return correlation_kernel_degenerate_raw(xi, 0.5 * (x + y), beta);
    const double dx = xi * xi - x * x, dy = xi * xi - y * y;
    const double tx = std::tanh(0.5 * beta * x), ty = std::tanh(0.5 * beta * y);
    const double first = x * y * xi_coth(xi, beta) * tx * ty / (dx * dy);
    const double second = xi * xi / (x * x - y * y) * (p_tanh(x, beta) / dy - p_tanh(y, beta) / dx);
    return first + second;
}

// G(xi, x, y): removable at xi = x and xi = y (a double root when x = y).
inline double correlation_kernel(double xi, double x, double y, double beta) {
    auto raw = [&](double e) { return correlation_kernel_raw(e, x, y, beta); };
    if (is_zero_temperature(beta)) return raw(xi);
    if (degenerate_pair(x, y)) {
        const double m = 0.5 * (x + y), win = double_root_window * m;
        if (std::abs(xi - m) < win) return removable_fit(raw, m, win, xi);
        return raw(xi);
    }
    for (double p : {x, y}) {
        const double win = simple_root_window * p;
        if (std::abs(xi - p) < win) return removable_fit(raw, p, win, xi);
    }
    return raw(xi);
}

// K(xi) assembled from the a, b, c, d pieces; requires x != y.
inline double correlation_numerator_raw(double xi, double x, double y, double b) {
    using std::cosh;
    using std::sinh;
    const double Q = (2 * xi * xi - x * x - y * y) / (x * x - y * y);
    const double cth = coth(0.5 * b * xi);
    const double sx = sinh(b * x), sy = sinh(b * y), cx = cosh(b * x), cy = cosh(b * y);
    const double shx2 = sinh(0.5 * b * x) * sinh(0.5 * b * x), shy2 = sinh(0.5 * b * y) * sinh(0.5 * b * y);
    const double a = xi * x * sx * (cy * Q - 1) - xi * y * sy * (cx * Q + 1) + x * y * cth * sx * sy -
                     4 * xi * xi * cth * shx2 * shy2;
    const double bb = xi * y * sx * (1 - cy * Q) + xi * x * sy * (cx * Q + 1) + 4 * x * y * cth * shx2 * shy2 -
                      xi * xi * cth * sx * sy;
    const double c = xi * x * sx * sy * Q - xi * y * (cx * cy - 1) * Q + 2 * x * y * cth * sx * shy2 -
                     2 * xi * xi * cth * shx2 * sy + xi * y * (cx - cy);
    const double d = -xi * y * sx * sy * Q + xi * x * (cx * cy - 1) * Q + 2 * x * y * cth * shx2 * sy -
                     2 * xi * xi * cth * sx * shy2 + xi * x * (cy - cx);
    const double tx = std::tanh(0.5 * b * x), ty = std::tanh(0.5 * b * y);
    return a + tx * ty * bb - ty * c - tx * d;
}

inline double correlation_numerator(double xi, double x, double y, double b) {
    const double tx = std::tanh(0.5 * b * x), ty = std::tanh(0.5 * b * y);
    return 4.0 * (x * y * coth(0.5 * b * xi) * tx * ty +
                  (xi * x * (xi * xi - x * x) * tx - xi * y * (xi * xi - y * y) * ty) / (x * x - y * y));
}

struct CorrelationBounds {
    double g_min;
    double g_max;
};

inline CorrelationBounds correlation_bounds(double x, double y, double beta) {
    validate_frequency(x, "omega_a");
    validate_frequency(y, "omega_b");
    validate_beta(beta);
    if (is_zero_temperature(beta)) return {0.0, 1.0 / (x + y)};
    const double g_min = 0.5 * beta * tanhc(0.5 * beta * x) * tanhc(0.5 * beta * y);
    const double g_max = degenerate_pair(x, y) ? p_tanh_slope(0.5 * (x + y), beta)
                                                : (p_tanh(x, beta) - p_tanh(y, beta)) / (x * x - y * y);
    return {g_min, g_max};
}

// sigma^2 = 4 f2^2 int I(xi)/xi G(xi, omega_a, omega_b).
inline IntegralResult multiplex_correlation(double omega_a, double omega_b, double f2, double beta,
                                            const SpectralDensity& bath, const QuadratureSettings& q = {}) {
    validate_frequency(omega_a, "omega_a");
    validate_frequency(omega_b, "omega_b");
    validate_coupling(f2, "f2");
    validate_beta(beta);
    validate(bath);
    if (f2 == 0.0) return {};
    auto k = [=](double xi) { return correlation_kernel(xi, omega_a, omega_b, beta) / xi; };
    const IntegralResult r = weighted_integral(bath, k, {omega_a, omega_b}, q);
    const double pref = 4.0 * f2 * f2;
    return {pref * r.value, pref * r.error, r.evaluations};
}

struct SignalToNoise {
    double snr = 0.0;
    double eta = 0.0;
    double normalized = 0.0;
    double error_estimate = 0.0;
};

inline SignalToNoise signal_to_noise(int M, double omega1, double omega, double f1, double beta,
                                     const SpectralDensity& bath, const QuadratureSettings& q = {}) {
    require(M >= 1, "M", "need at least one drive spin");
    validate_frequency(omega1, "omega1");
    validate_frequency(omega, "omega");
    validate_coupling(f1, "f1");
    validate_beta(beta);
    validate(bath);
    const double omega_r = reorganization_energy(bath, q).value;
    auto k = [=](double xi) { return correlation_kernel(xi, omega, omega, beta) / xi; };
    const IntegralResult s2 = weighted_integral(bath, k, {omega}, q);
    const double unit = 2.0 * omega_r * std::tanh(0.5 * beta * omega1) * std::tanh(0.5 * beta * omega) /
                        (omega * std::sqrt(s2.value));
    SignalToNoise out;
    out.snr = std::abs(f1) * M * unit;
    out.error_estimate = 0.5 * out.snr * s2.error / s2.value;
    if (const auto* p = std::get_if<PowerLawDensity>(&bath)) {
        out.eta = 4.0 * f1 * M * std::sqrt(p->strength);
        out.normalized = unit / (4.0 * std::sqrt(p->strength));
    } else {
        out.eta = std::numeric_limits<double>::quiet_NaN();
        out.normalized = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

// J = omega_c^{s-1} int I(x)/x G(x, w, w) over the unit-strength power law.
inline IntegralResult snr_noise_integral(double b, double w, double s, double r, const QuadratureSettings& q = {}) {
    require(b > 0, "beta_omega1", "must be positive");
    require(w >= 0 && std::isfinite(w), "omega_over_omega1", "must be non-negative");
    require(s > 0, "s", "must be positive");
    require(r > 0, "omega1_over_omegac", "must be positive");
    const double wc = 1.0 / r;
    const SpectralDensity bath = PowerLawDensity{1.0, s, wc};
    auto k = [=](double x) { return correlation_kernel(x, w, w, b) / x; };
    const std::vector<double> pts = w > 0 ? std::vector<double>{w} : std::vector<double>{};
    IntegralResult J = weighted_integral(bath, k, std::span<const double>(pts), q);
    const double scale = std::pow(wc, s - 1.0);
    return {scale * J.value, scale * J.error, J.evaluations};
}

// snr / eta in units omega1 = 1 for the power-law family.
inline double normalized_snr(double b, double w, double s, double r, const QuadratureSettings& q = {}) {
    require(b >= 0, "beta_omega1", "must be non-negative");
    if (b == 0.0) return 0.0;
    const double J = snr_noise_integral(b, w, s, r, q).value;
    const double tw = is_zero_temperature(b) ? 1.0 / w : 0.5 * b * tanhc(0.5 * b * w);
    return 0.5 * std::pow(r, -(s + 1.0) / 2.0) * gamma_fn(s) * std::tanh(0.5 * b) * tw / std::sqrt(J);
}

// The reduced kernel g(x) of the normalized signal-to-noise display.
inline double snr_reduced_kernel_raw(double x, double b, double w) {
    const double t = std::tanh(0.5 * b * w);
    const double d = w * w - x * x;
    return (t * t * (b * w * x * d + 4 * w * w * w * coth(0.5 * b * x)) + b * w * x * (-d) +
            (2 * x * x * x - 6 * w * w * x) * t) /
           (d * d);
}

inline double snr_reduced_kernel(double x, double b, double w) {
    const double win = double_root_window * w;
    if (std::abs(x - w) < win) return removable_fit([&](double e) { return snr_reduced_kernel_raw(e, b, w); }, w, win, x);
    return snr_reduced_kernel_raw(x, b, w);
}

inline double normalized_snr_reduced(double b, double w, double s, double r, const QuadratureSettings& q = {}) {
    require(b > 0 && std::isfinite(b), "beta_omega1", "must be positive and finite");
    require(w > 0, "omega_over_omega1", "must be positive");
    const double wc = 1.0 / r;
    const SpectralDensity bath = PowerLawDensity{1.0, s, wc};
    auto k = [=](double x) { return snr_reduced_kernel(x, b, w); };
    const double J = std::pow(wc, s - 1.0) * weighted_integral(bath, k, {w}, q).value;
    return std::pow(r, -(s + 1.0) / 2.0) * gamma_fn(s) * std::tanh(0.5 * b) * std::tanh(0.5 * b * w) /
           (std::sqrt(w) * std::sqrt(J));
}

inline Matrix normalized_snr_grid(std::span<const double> w, std::span<const double> b, double s, double r,
                                  const QuadratureSettings& q = {}, unsigned threads = 1) {
    Matrix out(w.size(), b.size());
    parallel_for(w.size() * b.size(), threads, [&](std::size_t k) {
        const std::size_t i = k / b.size(), j = k % b.size();
        out(i, j) = normalized_snr(b[j], w[i], s, r, q);
    });
    return out;
}

}  // namespace cohsynth
