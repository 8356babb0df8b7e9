#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include <cohsynth/cli/run.hpp>
#include <cohsynth/oracle.hpp>
#include <cohsynth/oscillator.hpp>
#include <cohsynth/perturbative.hpp>
#include <cohsynth/twobath.hpp>

using namespace cohsynth;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = COHSYNTH_SOURCE_DIR;
const std::string cli_binary = COHSYNTH_CLI;

struct Outcome {
    bool pass;
    std::string detail;
};

double rel_diff(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<double> logspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a * std::pow(b / a, static_cast<double>(i) / (n - 1));
    return v;
}

Outcome closed_form_identity() {
    const double f = 0.1;
    double worst = 0.0;
    for (double s : {0.5, 1.0, 2.0})
        for (double b : {0.1, 1.0, 5.0})
            for (double w2 : {0.1, 1.0, 10.0}) {
                const SpectralDensity bath = PowerLawDensity{0.2, s, 10.0};
                const TwoSpinSystem sys{1.0, w2, f, f, b};
                const double closed = two_spin_coherence(sys, bath, {}, OmegaRoute::closed_form).value;
                const double quad = two_spin_coherence(sys, bath, {}, OmegaRoute::quadrature).value;
                worst = std::max(worst, rel_diff(closed, quad));
            }
    return {worst <= 1e-8, fmt("max relative difference %.2e over 27 points (tol 1e-8)", worst)};
}

cli::RunConfig load_config(const std::string& name) {
    return cli::parse_config(slurp(source_dir / "configs" / (name + ".json")));
}

Outcome fig2_degeneracy() {
    const auto r1 = cli::evaluate(load_config("fig2_s1"));
    const auto r2 = cli::evaluate(load_config("fig2_s2"));
    if (r1.rows.size() != 64 * 64 || r2.rows.size() != r1.rows.size()) return {false, "unexpected grid size"};
    double worst = 0.0;
    for (std::size_t k = 0; k < r1.rows.size(); ++k) worst = std::max(worst, rel_diff(r1.rows[k][2], r2.rows[k][2]));
    return {worst <= 1e-10, fmt("max relative difference %.2e on 64x64 (tol 1e-10)", worst)};
}

Outcome resonance_dominance() {
    const auto bw = logspace(0.05, 20.0, 32);
    const auto wr = logspace(0.01, 1.0, 32);
    int failures = 0;
    double min_ratio = INFINITY;
    for (double s : {0.5, 1.0, 2.0})
        for (double b : bw)
            for (double r : wr) {
                const auto p = resonant_pair(1.0, 0.05, 0.05, b, PowerLawDensity{0.1, s, 1.0 / r});
                const double ratio = std::abs(p.transfer.value) / std::abs(p.self.value);
                min_ratio = std::min(min_ratio, ratio);
                if (!(ratio > 1.0)) ++failures;
            }
    return {failures == 0, fmt("%d of 3072 points violate, smallest |transfer/self| = %.4f", failures, min_ratio)};
}

Outcome synthesis_linearity() {
    const SpectralDensity bath = PowerLawDensity{0.1, 1.0, 5.0};
    const double single = synthesized_coherence({{{1.3, 0.07}}, {{1.0, 0.05}}, 1.5}, bath).value;
    double worst = 0.0;
    for (int M = 1; M <= 10; ++M) {
        MultiDriveSystem sys{std::vector<DriveSpin>(M, {1.3, 0.07}), {{1.0, 0.05}}, 1.5};
        worst = std::max(worst, rel_diff(synthesized_coherence(sys, bath).value, M * single));
    }
    return {worst <= 1e-12, fmt("max relative deviation from M x single %.2e (tol 1e-12)", worst)};
}

Outcome correlation_universality() {
    const double beta = 1e-3, f2 = 0.1;
    const SpectralDensity bath = PowerLawDensity{0.2, 1.0, 5.0};
    const double omega = reorganization_energy(bath).value;
    double lo = INFINITY, hi = -INFINITY;
    const auto freqs = logspace(0.3, 3.0, 6);
    for (double a : freqs)
        for (double b : freqs) {
            const double q = multiplex_correlation(a, b, f2, beta, bath).value / (2.0 * beta * f2 * f2 * omega);
            lo = std::min(lo, q);
            hi = std::max(hi, q);
        }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 4.0), ub(0.1, 5.0);
    int violations = 0;
    for (int k = 0; k < 1000; ++k) {
        const double xi = u(rng), x = u(rng), y = u(rng), b = ub(rng);
        const auto g = correlation_bounds(x, y, b);
        const double G = correlation_kernel(xi, x, y, b);
        if (!(g.g_min <= G * (1 + 1e-12) && G <= g.g_max * (1 + 1e-12))) ++violations;
    }
    const bool ok = lo >= 0.995 && hi <= 1.005 && violations == 0;
    return {ok, fmt("normalized sigma^2 in [%.6f, %.6f] (band [0.995, 1.005]), %d of 1000 sandwich violations", lo,
                    hi, violations)};
}

Outcome kernel_equivalence() {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> ub(0.1, 3.0), uxy(0.2, 2.2), uxi(0.05, 4.0);
    double worst = 0.0;
    for (int k = 0; k < 1000;) {
        const double b = ub(rng), x = uxy(rng), y = uxy(rng), xi = uxi(rng);
        if (std::abs(x - y) < 0.05) continue;
        worst = std::max(worst, rel_diff(correlation_numerator_raw(xi, x, y, b), correlation_numerator(xi, x, y, b)));
        ++k;
    }
    return {worst <= 1e-9, fmt("max relative difference %.2e over 1000 points (tol 1e-9)", worst)};
}

// 20 panels of 20-point Gauss-Legendre on [0, 1]: 400 nodes per dimension.
std::pair<std::vector<double>, std::vector<double>> composite_nodes() {
    using GL = boost::math::quadrature::gauss<double, 20>;
    std::vector<double> t, w;
    const int panels = 20;
    for (int p = 0; p < panels; ++p)
        for (std::size_t i = 0; i < GL::abscissa().size(); ++i)
            for (double sign : {-1.0, 1.0}) {
                t.push_back((p + 0.5 * (1.0 + sign * GL::abscissa()[i])) / panels);
                w.push_back(0.5 * GL::weights()[i] / panels);
            }
    return {t, w};
}

Outcome tau_coefficient_oracle() {
    const auto [t, w] = composite_nodes();
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uxi(0.05, 4.0), uR(0.2, 3.0), utheta(-1.3, 1.3), ub(0.1, 5.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double xi = uxi(rng), beta = ub(rng);
        const auto frame = SectorFrame::from_field(uR(rng), utheta(rng));
        SpinOperatorCombo acc;
        for (std::size_t a = 0; a < t.size(); ++a) {
            const double tau = beta * t[a];
            const auto outer = sigma_x_combo(tau, frame);
            for (std::size_t c = 0; c < t.size(); ++c) {
                const double tp = t[c] * tau;
                const double jac = beta * tau * w[a] * w[c];
                acc = acc + std::complex<double>(jac * kernel_phi(xi, tau - tp, beta)) *
                                (outer * sigma_x_combo(tp, frame));
            }
        }
        const auto tc = tau_coefficients(xi, frame, beta);
        for (auto [x, y] : {std::pair{tc.A, acc.c_id.real()}, {tc.B, acc.c_z.real()}, {tc.C, acc.c_x.real()},
                            {tc.D_im, acc.c_y.imag()}})
            worst = std::max(worst, rel_diff(x, y));
    }
    return {worst <= 1e-4, fmt("max relative difference %.2e over 100 draws x 4 coefficients (tol 1e-4)", worst)};
}

Outcome two_bath_reduction() {
    TwoBathConfig c;
    c.M = 3;
    c.N = 3;
    c.omega1 = 1.0;
    c.omega2 = 1.5;
    c.omega = 1.0;
    c.f1 = c.f2 = c.g1 = c.g2 = 0.1;
    c.bath1 = DiscreteBath({{1.0, std::sqrt(0.5)}});
    c.bath2 = DiscreteBath({{1.0, std::sqrt(0.7)}});
    c.beta = 0.3;
    std::vector<double> d;
    for (double eps : {1.0, 0.5, 0.25}) {
        const auto s = c.scaled_couplings(eps);
        const double additive = additive_coherence(s);
        d.push_back(std::abs(output_coherence(s, ExpansionOrder::zeroth).value - additive) / std::abs(additive));
    }
    const double p1 = std::log2(d[0] / d[1]), p2 = std::log2(d[1] / d[2]);
    const bool ok = d[2] < d[1] && d[1] < d[0] && p1 >= 2.0 && p2 >= 2.0;
    return {ok, fmt("relative differences %.3e %.3e %.3e, observed orders %.4f %.4f (need >= 2)", d[0], d[1], d[2],
                    p1, p2)};
}

Outcome oracle_equivalence() {
    const DiscreteBath bath({{0.8, 0.25}, {1.2, 0.3}, {1.7, 0.3}});
    const double reorg = reorganization_energy(bath).value;
    const double c = 0.1;
    const TwoSpinSystem sys{1.0, 1.0, c, c, 2.0};
    const double margin = sys.omega2 / (4.0 * c * c * reorg);
    const auto spec = two_spin_model(sys, bath, 8);
    const auto fit = scaling_check(spec, [](const ThermalState& s) { return spin_expectation(s, 1).x; });
    const double dev = rel_diff(fit.values.front(), two_spin_coherence(sys, bath).value);
    const double lf = lang_firsov_deviation(1.0, 0.3, {1.1, 0.5}, 40, 10);
    const bool ok = margin >= 100.0 && dev <= 0.1 && std::abs(fit.exponent - 2.0) <= 0.1 && lf <= 1e-9;
    return {ok, fmt("margin %.1f, ED vs formula %.2e (tol 0.1), exponent %.4f (2 +- 0.1), Lang-Firsov %.1e (tol 1e-9)",
                    margin, dev, fit.exponent, lf)};
}

Outcome oscillator_limits() {
    OscillatorSystem cold{1.0, 1.0, 0.1, 1e-3, 1e3, PowerLawDensity{0.2, 1.0, 1.0}};
    const double target = 4.0 * cold.f * cold.g * reorganization_energy(cold.bath).value / cold.E;
    const double snr_dev = rel_diff(displacement_snr(cold), target);

    double var_dev = 0.0;
    for (double E : {0.5, 1.0, 3.0})
        for (double beta : {0.1, 1.0, 10.0}) {
            const OscillatorSystem free{E, 1.0, 0.1, 0.0, beta, PowerLawDensity{0.2, 1.0, 1.0}};
            var_dev = std::max(var_dev, rel_diff(displacement_variance(free), 0.5 / std::tanh(0.5 * beta * E)));
        }

    const OscillatorSystem warm{1.0, 1.0, 0.05, 0.05, 2.0, DiscreteBath({{1.3, 0.4}})};
    const double ed = oscillator_moments(solve(oscillator_model(warm, 10, 10)), 1).mean;
    const double ed_dev = rel_diff(ed, mean_displacement(warm));

    const bool ok = snr_dev <= 1e-4 && var_dev <= 1e-12 && ed_dev <= 0.05;
    return {ok, fmt("T->0 SNR %.2e (tol 1e-4), free variance %.2e (tol 1e-12), ED <x> %.2e (tol 0.05)", snr_dev,
                    var_dev, ed_dev)};
}

Outcome cli_determinism() {
    const fs::path dir = fs::temp_directory_path() / ("cohsynth_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<std::string> mismatched;
    for (const char* name : {"fig2_s1", "fig2_s2", "fig3", "fig5"}) {
        const auto cfg = source_dir / "configs" / (std::string(name) + ".json");
        const std::string command = cli::to_string(load_config(name).command);
        std::string reference;
        for (int threads : {1, 4, 8}) {
            const auto out = dir / (std::string(name) + "_" + std::to_string(threads) + ".csv");
            const std::string cmd = "\"" + cli_binary + "\" " + command + " --config \"" + cfg.string() +
                                    "\" --out \"" + out.string() + "\" --threads " + std::to_string(threads) +
                                    " > /dev/null";
            if (std::system(cmd.c_str()) != 0) {
                mismatched.push_back(std::string(name) + " (exit status)");
                break;
            }
            const std::string csv = slurp(out);
            if (threads == 1) reference = csv;
            else if (csv != reference) mismatched.push_back(std::string(name) + " @" + std::to_string(threads));
        }
    }
    fs::remove_all(dir);
    std::string detail = "fig2_s1 fig2_s2 fig3 fig5 at 1/4/8 threads: ";
    if (mismatched.empty()) detail += "byte-identical";
    for (const auto& m : mismatched) detail += m + " ";
    return {mismatched.empty(), detail};
}

struct Criterion {
    int id;
    const char* name;
    double time_limit;
    std::function<Outcome()> check;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "closed-form identity", 5, closed_form_identity},
        {2, "normalized grid degeneracy", 5, fig2_degeneracy},
        {3, "resonance dominance", 30, resonance_dominance},
        {4, "synthesis linearity", 1, synthesis_linearity},
        {5, "correlation universality", 10, correlation_universality},
        {6, "correlation kernel equivalence", 1, kernel_equivalence},
        {7, "imaginary-time coefficient oracle", 60, tau_coefficient_oracle},
        {8, "two-bath additive reduction", 5, two_bath_reduction},
        {9, "exact-diagonalization equivalence", 120, oracle_equivalence},
        {10, "oscillator limits", 30, oscillator_limits},
        {11, "CLI determinism", 60, cli_determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && secs <= c.time_limit;
        if (!pass) ++failed;
        std::printf("%s criterion %2d %-34s %s; %.2f s (limit %g s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.time_limit);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
