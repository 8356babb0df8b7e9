#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <cohsynth/cli/run.hpp>

using namespace cohsynth;
namespace fs = std::filesystem;

namespace {

const fs::path test_dir = COHSYNTH_TEST_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("cohsynth_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

cli::RunConfig load(const std::string& name) { return cli::parse_config(slurp(test_dir / "configs" / (name + ".json"))); }

}  // namespace

TEST(Config, MinimalDefaults) {
    const auto c = cli::parse_config(R"({"command": "coherence"})");
    EXPECT_EQ(c.command, cli::Command::coherence);
    EXPECT_EQ(c.param("omega1"), 1.0);
    EXPECT_EQ(c.param("f2"), 0.1);
    EXPECT_EQ(c.baths.at("bath"), cli::default_bath());
    EXPECT_EQ(c.quadrature.rel_tol, 1e-10);
    EXPECT_EQ(c.normalize, cli::Normalize::none);
    EXPECT_TRUE(c.grid.empty());
}

TEST(Config, RejectsNegativeBeta) {
    try {
        cli::parse_config(R"({"command": "coherence", "parameters": {"beta": -1}})");
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "beta");
    }
}

TEST(Config, RejectsUnknownKeys) {
    EXPECT_THROW(cli::parse_config(R"({"command": "coherence", "colour": 1})"), ValidationError);
    EXPECT_THROW(cli::parse_config(R"({"command": "coherence", "parameters": {"omega3": 1}})"), ValidationError);
    EXPECT_THROW(cli::parse_config(R"({"command": "snr", "bath": {"type": "power-law", "cutof": 1}})"),
                 ValidationError);
    EXPECT_THROW(cli::parse_config(R"({"command": "coherence", "bath1": {}})"), ValidationError);
}

TEST(Config, ParseErrorReportsLine) {
    try {
        cli::parse_config("{\n  \"command\": \"coherence\",\n  \"parameters\": {\"beta\": }\n}");
        FAIL() << "expected a parse error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Config, CommandMismatch) {
    EXPECT_THROW(cli::parse_config(R"({"command": "snr"})", cli::Command::ratio), ValidationError);
    EXPECT_EQ(cli::parse_config("{}", cli::Command::ratio).command, cli::Command::ratio);
}

TEST(Config, SerializeRoundTrip) {
    for (const char* name : {"sweep", "twobath", "synth", "oracle_compare", "ratio"}) {
        const auto c = load(name);
        const auto again = cli::parse_config(cli::serialize_config(c));
        EXPECT_EQ(cli::to_json(again), cli::to_json(c)) << name;
    }
    auto c = cli::parse_config(R"({"command": "coherence", "parameters": {"beta": "inf"}})");
    EXPECT_TRUE(std::isinf(c.param("beta")));
    EXPECT_TRUE(std::isinf(cli::parse_config(cli::serialize_config(c)).param("beta")));
}

TEST(Golden, InProcessMatchesCommittedCsv) {
    for (const auto& entry : fs::directory_iterator(test_dir / "configs")) {
        const std::string name = entry.path().stem();
        const auto c = cli::parse_config(slurp(entry.path()));
        const std::string csv = cli::to_csv(cli::evaluate(c, 2));
        EXPECT_EQ(csv, slurp(test_dir / "golden" / (name + ".csv"))) << name;
    }
}

TEST(Output, CsvFormat) {
    const auto r = cli::evaluate(load("coherence"));
    const std::string csv = cli::to_csv(r);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    EXPECT_EQ(csv.back(), '\n');
    EXPECT_EQ(csv.substr(0, csv.find('\n')).rfind("omega2,beta,", 0), 0u);
    EXPECT_EQ(cli::format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(cli::format_number(-INFINITY), "-inf");
}

TEST(Output, QuadratureErrorWithinTolerance) {
    for (const char* name : {"multiplex", "snr", "oscillator", "ratio"}) {
        const auto c = load(name);
        const auto r = cli::evaluate(c);
        EXPECT_LE(r.max_relative_quadrature_error, c.quadrature.rel_tol) << name;
    }
}

TEST(Output, SidecarDeterministicApartFromTimestamp) {
    const auto c = load("snr");
    const auto r1 = cli::evaluate(c, 1), r2 = cli::evaluate(c, 3);
    EXPECT_EQ(cli::emit_metadata(c, r1, "T").dump(), cli::emit_metadata(c, r2, "T").dump());
    const auto m = cli::emit_metadata(c, r1);
    EXPECT_EQ(m["rows"], 64);
    EXPECT_EQ(m["config"]["command"], "snr");
    EXPECT_EQ(cli::sidecar_path("out/fig.csv"), fs::path("out/fig.meta.json"));
}

TEST(Output, ValidateReportsMargins) {
    const auto r = cli::evaluate(load("validate"));
    ASSERT_EQ(r.notes.size(), 4u);
    for (const char* key : {"output", "drive1", "drive2"}) {
        bool found = false;
        for (const auto& n : r.notes) found = found || n.find(std::string("margin ") + key) == 0;
        EXPECT_TRUE(found) << key;
    }
}

TEST(Output, ZeroTemperatureEdgeIsFinite) {
    const auto r = cli::evaluate(load("sweep"));
    for (const auto& row : r.rows)
        for (double v : row) EXPECT_TRUE(std::isfinite(v));
    const auto ratio = cli::evaluate(load("ratio"));
    for (const auto& row : ratio.rows)
        if (row[1] == 0.0) {
            EXPECT_EQ(row[2], 3.0);
        }
}

TEST(Run, WritesCsvAndSidecar) {
    const fs::path dir = scratch_dir("run");
    std::ostringstream out, err;
    cli::RunOptions opt;
    opt.out = (dir / "c.csv").string();
    opt.threads = 2;
    const auto c = load("coherence");
    ASSERT_EQ(cli::run(c, opt, out, err), 0) << err.str();
    EXPECT_EQ(slurp(dir / "c.csv"), cli::to_csv(cli::evaluate(c)));
    const auto meta = cli::json::parse(slurp(dir / "c.meta.json"));
    EXPECT_EQ(meta["tool"], "cohsynth");
    EXPECT_NE(out.str().find("64 rows"), std::string::npos);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
    EXPECT_EQ(files, 2u);
    fs::remove_all(dir);
}

TEST(Run, ExitCodes) {
    const fs::path dir = scratch_dir("exit");
    std::ostringstream out, err;
    cli::RunOptions opt;
    opt.out = (dir / "x.csv").string();

    auto bad = cli::parse_config(R"({"command": "coherence"})");
    bad.parameters["beta"] = -2.0;
    EXPECT_EQ(cli::run(bad, opt, out, err), 2);
    EXPECT_NE(err.str().find("beta"), std::string::npos);

    const auto hard = cli::parse_config(
        R"({"command": "multiplex", "quadrature": {"rel_tol": 1e-15, "abs_tol": 1e-300, "max_subdivisions": 1}})");
    EXPECT_EQ(cli::run(hard, opt, out, err), 3);
    EXPECT_NE(err.str().find("tolerance not met"), std::string::npos);

    const auto tab = cli::parse_config(R"({"command": "twobath", "parameters": {"kappa4_samples": 10},
        "bath1": {"type": "tabulated", "samples": [[0, 0], [1, 0.1], [5, 0]]}})");
    EXPECT_EQ(cli::run(tab, opt, out, err), 2);

    EXPECT_TRUE(fs::is_empty(dir));
    fs::remove_all(dir);
}

TEST(Run, UnwritableTargetLeavesNothingBehind) {
    const fs::path dir = scratch_dir("unwritable");
    std::ostringstream out, err;
    cli::RunOptions opt;
    opt.out = (dir / "missing" / "x.csv").string();
    EXPECT_EQ(cli::run(load("coherence"), opt, out, err), 1);
    EXPECT_TRUE(fs::is_empty(dir));
    fs::remove_all(dir);
}
