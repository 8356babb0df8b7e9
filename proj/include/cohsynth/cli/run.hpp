#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../grid.hpp"
#include "../oracle.hpp"
#include "../oscillator.hpp"
#include "../perturbative.hpp"
#include "../twobath.hpp"
#include "config.hpp"

namespace cohsynth::cli {

struct SweepResult {
    Command command = Command::coherence;
    std::vector<std::string> axis_names;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    double max_relative_quadrature_error = 0.0;
    std::vector<std::string> notes;
};

namespace detail {

struct Cell {
    std::vector<double> values;
    double rel_error = 0.0;
};

inline double rel(double err, double value) {
    if (err == 0.0) return 0.0;
    return value != 0.0 ? std::abs(err / value) : std::abs(err);
}

inline double power_law_strength(const RunConfig& c, const std::string& bath) {
    const json& b = c.baths.at(bath);
    if (b.at("type") != "power-law") throw ValidationError("normalize", "paper normalization needs a power-law bath");
    const double l = b.at("lambda").get<double>();
    if (l == 0.0) throw ValidationError("normalize", "paper normalization needs lambda > 0");
    return l;
}

inline TwoBathConfig two_bath_config(const std::map<std::string, double>& p, const RunConfig& c) {
    TwoBathConfig t;
    t.M = static_cast<int>(p.at("M"));
    t.N = static_cast<int>(p.at("N"));
    t.omega1 = p.at("omega1");
    t.omega2 = p.at("omega2");
    t.omega = p.at("omega");
    t.f1 = p.at("f1");
    t.f2 = p.at("f2");
    t.g1 = p.at("g1");
    t.g2 = p.at("g2");
    t.beta = p.at("beta");
    t.bath1 = make_bath(c.baths.at("bath1"));
    t.bath2 = make_bath(c.baths.at("bath2"));
    return t;
}

inline std::vector<std::string> columns_for(const RunConfig& c) {
    switch (c.command) {
        case Command::coherence: return {"self_induced", "two_spin"};
        case Command::ratio: return {"ratio"};
        case Command::synth: return {"coherence"};
        case Command::multiplex: return {"sigma2", "g_min", "g_max"};
        case Command::snr: return {"snr", "eta", "normalized"};
        case Command::twobath:
            if (c.param("kappa4_samples") > 0)
                return {"coherence", "log_partition", "additive", "kappa4_identity", "kappa4_std_error"};
            return {"coherence", "log_partition", "additive"};
        case Command::oscillator: return {"mean_x", "second_moment", "variance", "snr"};
        case Command::oracle_compare: return {"formula", "oracle", "relative_deviation", "scaling_exponent"};
        case Command::sweep: {
            const auto& f = c.option("formula");
            return {f == "two-spin" ? "coherence" : f == "ratio" ? "ratio" : "snr"};
        }
        case Command::validate: return {"output", "drive1", "drive2", "drive2_symmetric"};
    }
    return {};
}

inline Cell oracle_cell(const RunConfig& c, const std::map<std::string, double>& p) {
    const QuadratureSettings& q = c.quadrature;
    SpectralDensity bath = make_bath(c.baths.at("bath"));
    if (!std::holds_alternative<DiscreteBath>(bath)) {
        const auto strategy = c.option("strategy") == "linear-grid" ? DiscretizationStrategy::linear_grid
                                                                    : DiscretizationStrategy::equal_weight;
        bath = discretize(bath, static_cast<int>(p.at("modes")), p.at("xi_max"), strategy, q);
    }
    const auto& discrete = std::get<DiscreteBath>(bath);
    const int cutoff = static_cast<int>(p.at("cutoff"));
    const std::string& model = c.option("model");
    double formula = 0.0;
    ModelSpec spec;
    Observable obs;
    if (model == "two-spin") {
        const TwoSpinSystem s{p.at("omega1"), p.at("omega2"), p.at("f1"), p.at("f2"), p.at("beta")};
        formula = two_spin_coherence(s, bath, q).value;
        spec = two_spin_model(s, discrete, cutoff);
        obs = [](const ThermalState& st) { return spin_expectation(st, 1).x; };
    } else if (model == "self-induced") {
        const SelfInducedSystem s{p.at("omega1"), p.at("f1"), p.at("f2"), p.at("beta")};
        formula = self_induced_coherence(s, bath, q).value;
        spec = self_induced_model(s, discrete, cutoff);
        obs = [](const ThermalState& st) { return spin_expectation(st, 0).x; };
    } else {
        OscillatorSystem s{p.at("E"), p.at("omega"), p.at("f"), p.at("g"), p.at("beta"), bath};
        formula = mean_displacement(s, q);
        spec = oscillator_model(s, static_cast<int>(p.at("oscillator_cutoff")), cutoff);
        obs = [](const ThermalState& st) { return oscillator_moments(st, 1).mean; };
    }
    const ScalingFit fit = scaling_check(spec, obs);
    const double oracle = fit.values.front();
    const double dev = formula != 0.0 ? (oracle - formula) / std::abs(formula) : oracle;
    return {{formula, oracle, dev, fit.exponent}, 0.0};
}

inline Cell evaluate_cell(const RunConfig& c, const std::map<std::string, double>& p) {
    const QuadratureSettings& q = c.quadrature;
    switch (c.command) {
        case Command::coherence: {
            const SpectralDensity bath = make_bath(c.baths.at("bath"));
            const auto self = self_induced_coherence({p.at("omega1"), p.at("f1"), p.at("f2"), p.at("beta")}, bath, q);
            const auto two =
                two_spin_coherence({p.at("omega1"), p.at("omega2"), p.at("f1"), p.at("f2"), p.at("beta")}, bath, q);
            double scale = 1.0;
            if (c.normalize == Normalize::paper) {
                const double d = -4.0 * p.at("f1") * p.at("f2") * power_law_strength(c, "bath");
                if (d == 0.0) throw ValidationError("normalize", "paper normalization needs f1 f2 != 0");
                scale = 1.0 / d;
            }
            return {{self.value * scale, two.value * scale},
                    std::max(rel(self.error_estimate, self.value), rel(two.error_estimate, two.value))};
        }
        case Command::ratio: {
            const double b = p.at("beta_omega1");
            const double v = coherence_ratio(p.at("omega2_over_omega1"), b, p.at("s"), p.at("omega1_over_omegac"), q);
            double e = 0.0;
            if (b > 0) {
                const auto d = ratio_denominator(b, p.at("s"), p.at("omega1_over_omegac"), q);
                e = rel(d.error, d.value);
            }
            return {{v}, e};
        }
        case Command::synth: {
            const SpectralDensity bath = make_bath(c.baths.at("bath"));
            const auto mode = c.option("mode") == "exact" ? DensityMode::exact : DensityMode::high_frequency;
            CouplingDensity density = CouplingDensity::atoms({});
            if (c.coupling_density) {
                density = CouplingDensity::tabulated(c.coupling_density->first, c.coupling_density->second);
            } else {
                std::vector<DriveSpin> d;
                for (const auto& [w, f] : c.drives) d.push_back({w, f});
                require(!d.empty(), "drives", "need at least one drive spin");
                density = CouplingDensity::atoms(std::move(d));
            }
            const auto r = synthesized_coherence_density(density, p.at("omega_out"), p.at("f2"), p.at("beta"), bath,
                                                         mode, q);
            return {{r.value}, rel(r.error_estimate, r.value)};
        }
        case Command::multiplex: {
            const SpectralDensity bath = make_bath(c.baths.at("bath"));
            const auto s = multiplex_correlation(p.at("omega_a"), p.at("omega_b"), p.at("f2"), p.at("beta"), bath, q);
            const auto g = correlation_bounds(p.at("omega_a"), p.at("omega_b"), p.at("beta"));
            return {{s.value, g.g_min, g.g_max}, rel(s.error, s.value)};
        }
        case Command::snr: {
            const SpectralDensity bath = make_bath(c.baths.at("bath"));
            const double M = p.at("M");
            require(M >= 1, "M", "need at least one drive spin");
            const auto r = signal_to_noise(static_cast<int>(M), p.at("omega1"), p.at("omega"), p.at("f1"),
                                           p.at("beta"), bath, q);
            return {{r.snr, r.eta, r.normalized}, rel(r.error_estimate, r.snr)};
        }
        case Command::twobath: {
            const TwoBathConfig t = two_bath_config(p, c);
            const auto order = c.option("order") == "second" ? ExpansionOrder::second : ExpansionOrder::zeroth;
            const auto coh = output_coherence(t, order, q);
            const auto z = partition_function(t, order, q);
            Cell cell{{coh.value, z.log_value, additive_coherence(t, q)}, rel(coh.error_estimate, coh.value)};
            if (const long n = static_cast<long>(p.at("kappa4_samples")); n > 0) {
                const auto frame = sector_frame(t, 0, 0, q);
                const auto k4 = kappa4_triple_pairing(frame, t.beta, t.bath1, n, c.seed);
                const double f4 = std::pow(t.f2, 4);
                cell.values.push_back(f4 * k4.mean.c_id.real());
                cell.values.push_back(f4 * k4.std_error);
            }
            return cell;
        }
        case Command::oscillator: {
            const OscillatorSystem s{p.at("E"), p.at("omega"), p.at("f"), p.at("g"), p.at("beta"),
                                     make_bath(c.baths.at("bath"))};
            const auto pres = c.option("prescription") == "combined" ? MomentPrescription::combined
                                                                     : MomentPrescription::principal_value;
            const double x = mean_displacement(s, q);
            const auto x2 = second_moment(s, q, pres);
            const double var = x2.value - x * x;
            const double snr = var > 0 ? std::abs(x) / std::sqrt(var) : std::numeric_limits<double>::quiet_NaN();
            return {{x, x2.value, var, snr}, rel(x2.error, x2.value)};
        }
        case Command::oracle_compare: return oracle_cell(c, p);
        case Command::sweep: {
            const double w2 = p.at("omega2_over_omega1"), w = p.at("omega_over_omega1"), b = p.at("beta_omega1");
            const double s = p.at("s"), r = p.at("omega1_over_omegac");
            const std::string& f = c.option("formula");
            const bool paper = c.normalize == Normalize::paper;
            if (f == "two-spin") {
                const double v = normalized_two_spin(w2, b, s, r);
                return {{paper ? v : -4.0 * p.at("f1") * p.at("f2") * p.at("lambda") * v}, 0.0};
            }
            if (f == "ratio") {
                const double v = coherence_ratio(w2, b, s, r, q);
                double e = 0.0;
                if (b > 0) {
                    const auto d = ratio_denominator(b, s, r, q);
                    e = rel(d.error, d.value);
                }
                return {{v}, e};
            }
            const double v = normalized_snr(b, w, s, r, q);
            double e = 0.0;
            if (b > 0) {
                const auto J = snr_noise_integral(b, w, s, r, q);
                e = 0.5 * rel(J.error, J.value);
            }
            const double eta = 4.0 * p.at("f1") * p.at("M") * std::sqrt(p.at("lambda"));
            return {{paper ? v : std::abs(eta) * v}, e};
        }
        case Command::validate: {
            const auto rep = validity_report(two_bath_config(p, c), q);
            std::vector<double> v;
            for (const auto& m : rep.margins) v.push_back(m.ratio);
            return {v, 0.0};
        }
    }
    return {};
}

}  // namespace detail

inline SweepResult evaluate(const RunConfig& c, unsigned threads = 1) {
    validate_config(c);
    SweepResult res;
    res.command = c.command;
    for (const auto& a : c.grid) res.axis_names.push_back(a.name);
    res.columns = detail::columns_for(c);

    std::vector<std::vector<double>> axis_values;
    for (const auto& a : c.grid) axis_values.push_back(a.values());
    std::size_t n = 1;
    for (const auto& v : axis_values) n *= v.size();
    const std::size_t inner = axis_values.size() == 2 ? axis_values[1].size() : 1;

    std::vector<detail::Cell> cells(n);
    std::vector<std::vector<double>> coords(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (axis_values.size() >= 1) coords[k].push_back(axis_values[0][k / inner]);
        if (axis_values.size() == 2) coords[k].push_back(axis_values[1][k % inner]);
    }
    parallel_for(n, threads, [&](std::size_t k) {
        auto p = c.parameters;
        for (std::size_t a = 0; a < coords[k].size(); ++a) p[c.grid[a].name] = coords[k][a];
        cells[k] = detail::evaluate_cell(c, p);
    });
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> row = coords[k];
        row.insert(row.end(), cells[k].values.begin(), cells[k].values.end());
        res.rows.push_back(std::move(row));
        res.max_relative_quadrature_error = std::max(res.max_relative_quadrature_error, cells[k].rel_error);
    }
    if (c.command == Command::validate) {
        const auto rep = validity_report(detail::two_bath_config(c.parameters, c), c.quadrature);
        for (const auto& m : rep.margins) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "margin %s: %.6g / %.6g = %.6g (%s)", m.name.c_str(), m.scale, m.bound,
                          m.ratio, m.pass ? "pass" : "fail");
            res.notes.emplace_back(buf);
        }
    }
    if (c.command == Command::oracle_compare && !res.rows.empty()) {
        const auto& r = res.rows.front();
        const std::size_t o = res.axis_names.size();
        char buf[200];
        std::snprintf(buf, sizeof buf, "formula %.10g, oracle %.10g, relative deviation %.3g, scaling exponent %.4g",
                      r[o], r[o + 1], r[o + 2], r[o + 3]);
        res.notes.emplace_back(buf);
    }
    return res;
}

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv(const SweepResult& r) {
    std::string out;
    std::vector<std::string> header = r.axis_names;
    header.insert(header.end(), r.columns.begin(), r.columns.end());
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json emit_metadata(const RunConfig& c, const SweepResult& r, const std::string& timestamp = utc_timestamp()) {
    json m;
    m["tool"] = "cohsynth";
    m["version"] = tool_version;
    m["command"] = to_string(c.command);
    if (c.options.count("formula")) m["formula"] = c.options.at("formula");
    json cfg = to_json(c);
    cfg.erase("output");
    m["config"] = cfg;
    m["columns"] = r.columns;
    m["axes"] = r.axis_names;
    m["rows"] = r.rows.size();
    m["max_relative_quadrature_error"] = r.max_relative_quadrature_error;
    m["timestamp"] = timestamp;
    return m;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& out) {
    std::filesystem::path p = out;
    p.replace_extension(".meta.json");
    return p;
}

inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f << content;
        f.flush();
        if (!f) {
            f.close();
            std::filesystem::remove(tmp);
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

struct RunOptions {
    std::optional<std::string> out;
    unsigned threads = 1;
};

inline std::string summary_line(const RunConfig& c, const SweepResult& r, const std::string& target) {
    std::ostringstream s;
    s << to_string(c.command) << ": " << r.rows.size() << (r.rows.size() == 1 ? " row" : " rows") << " -> " << target
      << " (max relative quadrature error " << format_number(r.max_relative_quadrature_error) << ")";
    return s.str();
}

// Exit status: 0 success, 1 other failure, 2 validation, 3 tolerance not met.
inline int run(const RunConfig& c, const RunOptions& opt, std::ostream& out, std::ostream& err) {
    const std::optional<std::string> target = opt.out ? opt.out : c.output;
    try {
        const SweepResult r = evaluate(c, opt.threads);
        const std::string csv = to_csv(r);
        if (target) {
            write_atomically(*target, csv);
            write_atomically(sidecar_path(*target), emit_metadata(c, r).dump(2) + "\n");
            out << summary_line(c, r, *target) << '\n';
            for (const auto& n : r.notes) out << n << '\n';
        } else {
            out << csv;
            err << summary_line(c, r, "stdout") << '\n';
            for (const auto& n : r.notes) err << n << '\n';
        }
        return 0;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const ToleranceNotMet& e) {
        err << "tolerance not met: " << e.what() << " (partial " << format_number(e.partial_result()) << ", error "
            << format_number(e.error_estimate()) << ")\n";
        return 3;
    } catch (const DomainError& e) {
        err << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const DivergentIntegral& e) {
        err << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const DimensionExceeded& e) {
        err << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace cohsynth::cli
