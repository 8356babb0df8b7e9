#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "../errors.hpp"
#include "../quadrature.hpp"
#include "../spectral.hpp"

namespace cohsynth::cli {

using nlohmann::json;

inline constexpr const char* tool_version = "0.1.0";

enum class Command { coherence, ratio, synth, multiplex, snr, twobath, oscillator, oracle_compare, sweep, validate };

inline const std::vector<std::pair<Command, std::string>>& command_names() {
    static const std::vector<std::pair<Command, std::string>> names{
        {Command::coherence, "coherence"}, {Command::ratio, "ratio"},
        {Command::synth, "synth"},         {Command::multiplex, "multiplex"},
        {Command::snr, "snr"},             {Command::twobath, "twobath"},
        {Command::oscillator, "oscillator"}, {Command::oracle_compare, "oracle-compare"},
        {Command::sweep, "sweep"},         {Command::validate, "validate"}};
    return names;
}

inline std::string to_string(Command c) {
    for (const auto& [k, v] : command_names())
        if (k == c) return v;
    return "unknown";
}

inline Command parse_command(const std::string& s) {
    for (const auto& [k, v] : command_names())
        if (v == s) return k;
    throw ValidationError("command", "unknown command '" + s + "'");
}

enum class Normalize { none, paper };

inline Normalize parse_normalize(const std::string& s) {
    if (s == "none") return Normalize::none;
    if (s == "paper") return Normalize::paper;
    throw ValidationError("normalize", "expected 'none' or 'paper'");
}

inline std::string to_string(Normalize n) { return n == Normalize::paper ? "paper" : "none"; }

enum class AxisScale { linear, log };

struct Axis {
    std::string name;
    double min = 0.0;
    double max = 1.0;
    int points = 2;
    AxisScale scale = AxisScale::linear;

    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) {
            const double t = static_cast<double>(i) / (points - 1);
            v[i] = scale == AxisScale::linear ? min + t * (max - min)
                                              : std::exp(std::log(min) + t * (std::log(max) - std::log(min)));
        }
        v.front() = min;
        v.back() = max;
        return v;
    }
};

struct Schema {
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<std::pair<std::string, std::vector<std::string>>> options;
    std::vector<std::string> baths;
    bool drives = false;
    bool grid_required = false;
};

inline const Schema& schema(Command c) {
    static const std::map<Command, Schema> table = [] {
        std::map<Command, Schema> t;
        const std::vector<std::pair<std::string, double>> two_bath{
            {"M", 1}, {"N", 1}, {"omega1", 1}, {"omega2", 1}, {"omega", 1}, {"f1", 0.1},
            {"f2", 0.1}, {"g1", 0.1}, {"g2", 0.1}, {"beta", 1}};
        t[Command::coherence] = {{{"omega1", 1}, {"omega2", 1}, {"f1", 0.1}, {"f2", 0.1}, {"beta", 1}}, {}, {"bath"}};
        t[Command::ratio] = {{{"omega2_over_omega1", 1}, {"beta_omega1", 1}, {"s", 1}, {"omega1_over_omegac", 0.1}},
                             {}, {}};
        t[Command::synth] = {{{"omega_out", 1}, {"f2", 0.1}, {"beta", 1}},
                             {{"mode", {"exact", "high-frequency"}}}, {"bath"}, true};
        t[Command::multiplex] = {{{"omega_a", 1}, {"omega_b", 2}, {"f2", 0.1}, {"beta", 1}}, {}, {"bath"}};
        t[Command::snr] = {{{"M", 1}, {"omega1", 1}, {"omega", 1}, {"f1", 0.1}, {"beta", 1}}, {}, {"bath"}};
        auto tb = two_bath;
        tb.emplace_back("kappa4_samples", 0);
        t[Command::twobath] = {tb, {{"order", {"second", "zeroth"}}}, {"bath1", "bath2"}};
        t[Command::oscillator] = {{{"E", 1}, {"omega", 1}, {"f", 0.1}, {"g", 0.1}, {"beta", 1}},
                                  {{"prescription", {"combined", "principal-value"}}}, {"bath"}};
        t[Command::oracle_compare] = {
            {{"omega1", 1}, {"omega2", 1}, {"f1", 0.05}, {"f2", 0.05}, {"E", 1}, {"omega", 1}, {"f", 0.05},
             {"g", 0.05}, {"beta", 2}, {"cutoff", 8}, {"oscillator_cutoff", 8}, {"modes", 3}, {"xi_max", 10}},
            {{"model", {"two-spin", "self-induced", "oscillator"}}, {"strategy", {"equal-weight", "linear-grid"}}},
            {"bath"}};
        t[Command::sweep] = {{{"omega2_over_omega1", 1}, {"omega_over_omega1", 1}, {"beta_omega1", 1}, {"s", 1},
                              {"omega1_over_omegac", 0.1}, {"f1", 0.1}, {"f2", 0.1}, {"lambda", 1}, {"M", 1}},
                             {{"formula", {"two-spin", "ratio", "snr"}}}, {}, false, true};
        t[Command::validate] = {two_bath, {}, {"bath1", "bath2"}};
        return t;
    }();
    return table.at(c);
}

struct RunConfig {
    Command command = Command::coherence;
    std::map<std::string, double> parameters;
    std::map<std::string, std::string> options;
    std::map<std::string, json> baths;
    std::vector<std::pair<double, double>> drives;
    std::optional<std::pair<std::vector<double>, std::vector<double>>> coupling_density;
    std::vector<Axis> grid;
    std::optional<std::string> output;
    Normalize normalize = Normalize::none;
    QuadratureSettings quadrature;
    std::uint64_t seed = 1;

    double param(const std::string& name) const { return parameters.at(name); }
    int integer(const std::string& name) const { return static_cast<int>(parameters.at(name)); }
    const std::string& option(const std::string& name) const { return options.at(name); }
};

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ValidationError(where.empty() ? k : where + "." + k, "unknown key");
    }
}

inline double number(const json& v, const std::string& field) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        throw ValidationError(field, "expected a number or \"inf\"");
    }
    if (!v.is_number()) throw ValidationError(field, "expected a number");
    return v.get<double>();
}

inline json number_json(double x) { return std::isinf(x) && x > 0 ? json("inf") : json(x); }

inline std::vector<std::pair<double, double>> pairs(const json& v, const std::string& field) {
    if (!v.is_array()) throw ValidationError(field, "expected an array of pairs");
    std::vector<std::pair<double, double>> out;
    for (const auto& p : v) {
        if (!p.is_array() || p.size() != 2) throw ValidationError(field, "each entry must be a pair");
        out.emplace_back(number(p[0], field), number(p[1], field));
    }
    return out;
}

inline json pairs_json(const std::vector<std::pair<double, double>>& v) {
    json a = json::array();
    for (const auto& [x, y] : v) a.push_back({x, y});
    return a;
}

}  // namespace detail

// Normalized bath description with defaults filled in.
inline json normalize_bath(const json& b, const std::string& field) {
    if (!b.is_object()) throw ValidationError(field, "expected an object");
    const std::string type = b.value("type", "power-law");
    if (type == "power-law") {
        detail::reject_unknown(b, {"type", "lambda", "s", "omega_c"}, field);
        json o{{"type", type},
               {"lambda", b.contains("lambda") ? detail::number(b["lambda"], field + ".lambda") : 1.0},
               {"s", b.contains("s") ? detail::number(b["s"], field + ".s") : 1.0},
               {"omega_c", b.contains("omega_c") ? detail::number(b["omega_c"], field + ".omega_c") : 1.0}};
        return o;
    }
    if (type == "tabulated") {
        detail::reject_unknown(b, {"type", "samples"}, field);
        if (!b.contains("samples")) throw ValidationError(field + ".samples", "required");
        return {{"type", type}, {"samples", detail::pairs_json(detail::pairs(b["samples"], field + ".samples"))}};
    }
    if (type == "discrete") {
        detail::reject_unknown(b, {"type", "modes"}, field);
        if (!b.contains("modes")) throw ValidationError(field + ".modes", "required");
        return {{"type", type}, {"modes", detail::pairs_json(detail::pairs(b["modes"], field + ".modes"))}};
    }
    throw ValidationError(field + ".type", "expected power-law, tabulated or discrete");
}

inline SpectralDensity make_bath(const json& b) {
    const std::string type = b.at("type");
    SpectralDensity d;
    if (type == "power-law") {
        d = PowerLawDensity{b.at("lambda").get<double>(), b.at("s").get<double>(), b.at("omega_c").get<double>()};
    } else if (type == "tabulated") {
        std::vector<double> x, y;
        for (const auto& p : b.at("samples")) {
            x.push_back(p[0]);
            y.push_back(p[1]);
        }
        d = TabulatedDensity(std::move(x), std::move(y));
    } else {
        std::vector<BathMode> modes;
        for (const auto& p : b.at("modes")) modes.push_back({p[0].get<double>(), p[1].get<double>()});
        d = DiscreteBath(std::move(modes));
    }
    validate(d);
    return d;
}

inline json default_bath() { return {{"type", "power-law"}, {"lambda", 1.0}, {"s", 1.0}, {"omega_c", 1.0}}; }

inline QuadratureSettings parse_quadrature(const json& q) {
    detail::reject_unknown(q, {"rel_tol", "abs_tol", "max_subdivisions", "singularity"}, "quadrature");
    QuadratureSettings s;
    if (q.contains("rel_tol")) s.rel_tol = detail::number(q["rel_tol"], "quadrature.rel_tol");
    if (q.contains("abs_tol")) s.abs_tol = detail::number(q["abs_tol"], "quadrature.abs_tol");
    if (q.contains("max_subdivisions")) {
        if (!q["max_subdivisions"].is_number_integer())
            throw ValidationError("quadrature.max_subdivisions", "expected an integer");
        s.max_subdivisions = q["max_subdivisions"].get<int>();
    }
    if (q.contains("singularity")) {
        const std::string h = q["singularity"].is_string() ? q["singularity"].get<std::string>() : "";
        if (h == "subtract-and-limit") s.singularity = SingularityHandling::subtract_and_limit;
        else if (h == "split-at-point") s.singularity = SingularityHandling::split_at_point;
        else throw ValidationError("quadrature.singularity", "expected subtract-and-limit or split-at-point");
    }
    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ValidationError("quadrature." + e.field(), e.what());
    }
    return s;
}

inline void validate_config(const RunConfig& c) {
    const Schema& sc = schema(c.command);
    for (const auto& [name, def] : sc.scalars) {
        const double v = c.parameters.at(name);
        if (std::isnan(v)) throw ValidationError(name, "must not be NaN");
        if (name == "beta" && !(v > 0)) throw ValidationError("beta", "must be positive");
        for (const char* intname : {"M", "N", "cutoff", "oscillator_cutoff", "modes", "kappa4_samples"})
            if (name == intname && (v < 0 || v != std::floor(v) || !std::isfinite(v)))
                throw ValidationError(name, "must be a non-negative integer");
    }
    if (sc.grid_required && c.grid.size() != 2) throw ValidationError("grid", "this command needs two axes");
    if (c.grid.size() > 2) throw ValidationError("grid", "at most two axes are supported");
    for (const auto& a : c.grid) {
        bool known = false;
        for (const auto& [name, def] : sc.scalars) known = known || name == a.name;
        if (!known) throw ValidationError("grid", "axis '" + a.name + "' is not a parameter of this command");
        if (a.points < 2) throw ValidationError("grid", "axis '" + a.name + "' needs at least two points");
        if (!std::isfinite(a.min) || !std::isfinite(a.max) || a.max < a.min)
            throw ValidationError("grid", "axis '" + a.name + "' needs finite min <= max");
        if (a.scale == AxisScale::log && !(a.min > 0))
            throw ValidationError("grid", "log axis '" + a.name + "' needs a positive minimum");
    }
    if (c.grid.size() == 2 && c.grid[0].name == c.grid[1].name) throw ValidationError("grid", "axes must differ");
    for (const auto& [name, b] : c.baths) make_bath(b);
    c.quadrature.validate();
}

inline RunConfig parse_config(const std::string& text, std::optional<Command> command = std::nullopt) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw ValidationError("config", "parse error at line " + std::to_string(line) + ": " + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config", "top level must be an object");
    detail::reject_unknown(doc,
                           {"command", "formula", "parameters", "bath", "bath1", "bath2", "drives",
                            "coupling_density", "grid", "normalize", "quadrature", "seed", "output", "options"},
                           "");

    RunConfig c;
    if (doc.contains("command")) {
        if (!doc["command"].is_string()) throw ValidationError("command", "expected a string");
        c.command = parse_command(doc["command"]);
        if (command && *command != c.command)
            throw ValidationError("command", "config is for '" + to_string(c.command) + "'");
    } else if (command) {
        c.command = *command;
    } else {
        throw ValidationError("command", "required");
    }
    const Schema& sc = schema(c.command);

    const json params = doc.value("parameters", json::object());
    if (!params.is_object()) throw ValidationError("parameters", "expected an object");
    for (const auto& [k, v] : params.items()) {
        bool known = false;
        for (const auto& [name, def] : sc.scalars) known = known || name == k;
        if (!known) throw ValidationError("parameters." + k, "unknown key");
    }
    for (const auto& [name, def] : sc.scalars)
        c.parameters[name] = params.contains(name) ? detail::number(params[name], name) : def;

    json opts = doc.value("options", json::object());
    if (!opts.is_object()) throw ValidationError("options", "expected an object");
    if (doc.contains("formula")) opts["formula"] = doc["formula"];
    for (const auto& [k, v] : opts.items()) {
        bool known = false;
        for (const auto& [name, allowed] : sc.options) known = known || name == k;
        if (!known) throw ValidationError(k, "unknown option");
    }
    for (const auto& [name, allowed] : sc.options) {
        std::string v = allowed.front();
        if (opts.contains(name)) {
            if (!opts[name].is_string()) throw ValidationError(name, "expected a string");
            v = opts[name].get<std::string>();
        }
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
            throw ValidationError(name, "unsupported value '" + v + "'");
        c.options[name] = v;
    }

    for (const char* key : {"bath", "bath1", "bath2"}) {
        const bool wanted = std::find(sc.baths.begin(), sc.baths.end(), key) != sc.baths.end();
        if (doc.contains(key) && !wanted) throw ValidationError(key, "not used by this command");
        if (wanted) c.baths[key] = doc.contains(key) ? normalize_bath(doc[key], key) : default_bath();
    }

    if (doc.contains("drives") && !sc.drives) throw ValidationError("drives", "not used by this command");
    if (doc.contains("coupling_density") && !sc.drives)
        throw ValidationError("coupling_density", "not used by this command");
    if (sc.drives) {
        c.drives = doc.contains("drives") ? detail::pairs(doc["drives"], "drives")
                                          : std::vector<std::pair<double, double>>{{1.0, 0.1}};
        if (doc.contains("coupling_density")) {
            const json& cd = doc["coupling_density"];
            if (!cd.is_object()) throw ValidationError("coupling_density", "expected an object");
            detail::reject_unknown(cd, {"omega", "f1"}, "coupling_density");
            std::vector<double> w, f;
            for (const auto& x : cd.value("omega", json::array())) w.push_back(detail::number(x, "coupling_density.omega"));
            for (const auto& x : cd.value("f1", json::array())) f.push_back(detail::number(x, "coupling_density.f1"));
            c.coupling_density = std::pair{w, f};
        }
    }

    if (doc.contains("grid")) {
        if (!doc["grid"].is_array()) throw ValidationError("grid", "expected an array of axes");
        for (const auto& a : doc["grid"]) {
            if (!a.is_object()) throw ValidationError("grid", "each axis must be an object");
            detail::reject_unknown(a, {"name", "min", "max", "points", "scale"}, "grid");
            Axis ax;
            if (!a.contains("name") || !a["name"].is_string()) throw ValidationError("grid.name", "required string");
            ax.name = a["name"];
            ax.min = detail::number(a.value("min", json(0.0)), "grid.min");
            ax.max = detail::number(a.value("max", json(1.0)), "grid.max");
            if (a.contains("points")) {
                if (!a["points"].is_number_integer()) throw ValidationError("grid.points", "expected an integer");
                ax.points = a["points"].get<int>();
            }
            const std::string scale = a.value("scale", "linear");
            if (scale == "linear") ax.scale = AxisScale::linear;
            else if (scale == "log") ax.scale = AxisScale::log;
            else throw ValidationError("grid.scale", "expected linear or log");
            c.grid.push_back(ax);
        }
    }

    if (doc.contains("normalize")) {
        if (!doc["normalize"].is_string()) throw ValidationError("normalize", "expected a string");
        c.normalize = parse_normalize(doc["normalize"]);
    }
    if (doc.contains("quadrature")) c.quadrature = parse_quadrature(doc["quadrature"]);
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw ValidationError("seed", "expected a non-negative integer");
        c.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("output")) {
        if (!doc["output"].is_string()) throw ValidationError("output", "expected a string");
        c.output = doc["output"].get<std::string>();
    }
    validate_config(c);
    return c;
}

inline json to_json(const RunConfig& c) {
    json doc;
    doc["command"] = to_string(c.command);
    json params = json::object();
    for (const auto& [k, v] : c.parameters) params[k] = detail::number_json(v);
    doc["parameters"] = params;
    json opts = json::object();
    for (const auto& [k, v] : c.options) {
        if (k == "formula") doc["formula"] = v;
        else opts[k] = v;
    }
    if (!opts.empty()) doc["options"] = opts;
    for (const auto& [k, v] : c.baths) doc[k] = v;
    if (schema(c.command).drives) doc["drives"] = detail::pairs_json(c.drives);
    if (c.coupling_density) doc["coupling_density"] = {{"omega", c.coupling_density->first}, {"f1", c.coupling_density->second}};
    if (!c.grid.empty()) {
        json g = json::array();
        for (const auto& a : c.grid)
            g.push_back({{"name", a.name}, {"min", a.min}, {"max", a.max}, {"points", a.points},
                         {"scale", a.scale == AxisScale::log ? "log" : "linear"}});
        doc["grid"] = g;
    }
    doc["normalize"] = to_string(c.normalize);
    doc["quadrature"] = {{"rel_tol", c.quadrature.rel_tol},
                         {"abs_tol", c.quadrature.abs_tol},
                         {"max_subdivisions", c.quadrature.max_subdivisions},
                         {"singularity", c.quadrature.singularity == SingularityHandling::subtract_and_limit
                                             ? "subtract-and-limit"
                                             : "split-at-point"}};
    doc["seed"] = c.seed;
    if (c.output) doc["output"] = *c.output;
    return doc;
}

inline std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace cohsynth::cli
