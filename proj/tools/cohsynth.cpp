#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include <cohsynth/cli/run.hpp>

namespace cli = cohsynth::cli;

namespace {

const char* describe(cli::Command c) {
    switch (c) {
        case cli::Command::coherence: return "self-induced and two-spin output coherence";
        case cli::Command::ratio: return "dimensionless two-spin to self-induced coherence ratio";
        case cli::Command::synth: return "coherence synthesized by several drive spins";
        case cli::Command::multiplex: return "correlation of two output spins and its bounds";
        case cli::Command::snr: return "signal-to-noise ratio of the output coherence";
        case cli::Command::twobath: return "sector-sum coherence with two baths and drive groups";
        case cli::Command::oscillator: return "displacement moments of an oscillator output";
        case cli::Command::oracle_compare: return "perturbative formula against exact diagonalization";
        case cli::Command::sweep: return "dimensionless heatmap grids";
        case cli::Command::validate: return "perturbative validity margins of a two-bath setup";
    }
    return "";
}

unsigned default_threads() {
    if (const char* env = std::getenv("COHSYNTH_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n >= 1) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
        }
        std::cerr << "ignoring invalid COHSYNTH_THREADS='" << env << "'\n";
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermal-bath coherence synthesis calculator", "cohsynth"};
    app.set_version_flag("--version", std::string(cli::tool_version));
    app.require_subcommand(1, 1);

    std::string config_path, out_path, normalize;
    double tol = 0.0;
    unsigned threads = 0;
    for (const auto& [cmd, name] : cli::command_names()) {
        auto* sub = app.add_subcommand(name, describe(cmd));
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--out", out_path, "CSV output path (stdout when omitted)");
        sub->add_option("--normalize", normalize, "paper | none")->check(CLI::IsMember({"paper", "none"}));
        sub->add_option("--tol", tol, "relative quadrature tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto command = cli::parse_command(app.get_subcommands().front()->get_name());
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "validation error: config: cannot read " << config_path << '\n';
            return 2;
        }
        std::stringstream text;
        text << in.rdbuf();
        cli::RunConfig cfg = cli::parse_config(text.str(), command);
        if (!normalize.empty()) cfg.normalize = cli::parse_normalize(normalize);
        if (tol > 0) cfg.quadrature.rel_tol = tol;

        cli::RunOptions opt;
        if (!out_path.empty()) opt.out = out_path;
        opt.threads = threads > 0 ? threads : default_threads();
        return cli::run(cfg, opt, std::cout, std::cerr);
    } catch (const cohsynth::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
