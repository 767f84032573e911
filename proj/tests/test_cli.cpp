#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "experiment.hpp"

namespace fs = std::filesystem;
using experiment::ConfigError;
using experiment::parse_config;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("semilin_cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

/// Runs the binary and returns its exit status.
int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + SEMILIN_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string config(const std::string& name) { return std::string(SEMILIN_SOURCE_DIR) + "/configs/" + name; }

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

std::string expect_config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ConfigError for " << text;
    return {};
}

}  // namespace

TEST(Config, MinimalCertifyFillsDefaults) {
    const auto c = parse_config(R"({"command": "certify", "n": 3, "potential": {"kind": "zero"}})");
    EXPECT_EQ(c.command, "certify");
    EXPECT_EQ(c.n, 3);
    EXPECT_EQ(c.potential.kind, "zero");
    EXPECT_EQ(c.integrator.rel_tol, 1e-10);
    EXPECT_EQ(c.conditions.size(), 2u);
    const auto echo = experiment::config_echo(c);
    EXPECT_EQ(echo["integrator"]["max_step"], 0.05);
    EXPECT_EQ(echo["certify"]["grid_points"], semilin::kConditionAGrid);
}

TEST(Config, UnknownKeysAreNamed) {
    EXPECT_NE(expect_config_error(R"({"command": "certify", "foo": 1})").find("foo"), std::string::npos);
    EXPECT_NE(expect_config_error(R"({"command": "certify", "potential": {"kind": "zero", "bar": 2}})")
                  .find("potential.bar"),
              std::string::npos);
}

TEST(Config, ValidationNamesTheField) {
    EXPECT_NE(expect_config_error(R"({"command": "certify", "n": 2})").find("'n'"), std::string::npos);
    EXPECT_NE(expect_config_error(R"({"command": "scan-conjugate", "n": 3})").find("'n'"), std::string::npos);
    EXPECT_NE(expect_config_error(R"({"command": "solve", "integrator": {"rel_tol": -1}})").find("rel_tol"),
              std::string::npos);
    EXPECT_NE(expect_config_error(R"({"command": "nope"})").find("command"), std::string::npos);
    EXPECT_NE(expect_config_error(R"({"n": 3})").find("command"), std::string::npos);
    EXPECT_NE(expect_config_error(R"({"command": "foliate", "foliate": {"alphas": [1, 0]}})").find("alphas"),
              std::string::npos);
    EXPECT_NE(expect_config_error(R"({"command": "rigidity-scaling", "rigidity": {"N_list": [4, 8]}})")
                  .find("N_list"),
              std::string::npos);
}

TEST(Config, ParseErrorsCarryLineInfo) {
    const auto msg = expect_config_error("{\n  \"command\": \"certify\",\n  \"n\": ,\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Config, GridForms) {
    const auto c = parse_config(
        R"({"command": "scan-conjugate", "scan": {"u0_grid": {"min": -1, "max": 1, "points": 5}, "p0_grid": [0.5]}})");
    ASSERT_TRUE(c.u0_grid && c.p0_grid);
    EXPECT_EQ(c.u0_grid->size(), 5u);
    EXPECT_EQ(c.u0_grid->at(1), -0.5);
    EXPECT_EQ(c.p0_grid->size(), 1u);
}

TEST(Csv, QuotesPerRfc4180) {
    experiment::CsvWriter w({"a", "b"});
    w.row_strings({"x,y", "say \"hi\""});
    EXPECT_EQ(w.str(), "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n");
    EXPECT_THROW(w.row({1.0}), std::logic_error);
}

TEST(Cli, CertifyZeroPotential) {
    const auto out = scratch("certify");
    EXPECT_EQ(run_cli("--config " + config("certify_zero.json") + " --out " + out.string()), 0);
    const auto report = experiment::Json::parse(slurp(out / "report.json"));
    EXPECT_EQ(report["verdict"], "certified");
    for (const auto& c : report["results"]["certificates"]) {
        ASSERT_TRUE(c["margin"].is_number());
        EXPECT_TRUE(std::isfinite(c["margin"].get<double>()));
    }
}

TEST(Cli, ScanZeroPotentialHasHeaderOnlyFindings) {
    const auto out = scratch("scan0");
    EXPECT_EQ(run_cli("scan-conjugate --config " + config("scan_zero.json") + " --out " + out.string()), 1);
    EXPECT_EQ(slurp(out / "findings.csv"), "u0,p0,t1,t2\r\n");
}

TEST(Cli, FoliateFamilyCsvShape) {
    const auto out = scratch("foliate");
    EXPECT_EQ(run_cli("--config " + config("foliate_na.json") + " --out " + out.string() + " --jobs 4"), 0);
    const auto csv = slurp(out / "family.csv");
    const auto header = csv.substr(0, csv.find('\n'));
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), 21);  // 1 + 21 columns
    EXPECT_EQ(count_lines(csv), 257u);
}

TEST(Cli, RigidityScalingConfirmed) {
    const auto out = scratch("rigidity");
    EXPECT_EQ(run_cli("--config " + config("rigidity_scaling.json") + " --out " + out.string() + " --jobs 4"), 0);
    const auto report = experiment::Json::parse(slurp(out / "report.json"));
    EXPECT_NEAR(report["results"]["slope_lhs"].get<double>(), -3.0, 0.15);
    EXPECT_NEAR(report["results"]["slope_rhs"].get<double>(), -5.0, 0.15);
}

TEST(Cli, SolveWritesTrajectoryEventsAndJacobi) {
    const auto out = scratch("solve");
    EXPECT_EQ(run_cli("--config " + config("solve_bump.json") + " --out " + out.string()), 0);
    const auto traj = slurp(out / "trajectory.csv");
    EXPECT_EQ(traj.substr(0, traj.find('\r')), "t,r,u,p,H");
    EXPECT_EQ(count_lines(traj), 502u);
    const auto jac = slurp(out / "jacobi.csv");
    EXPECT_EQ(jac.substr(0, jac.find('\r')), "t,xi,xidot,omega,flags");
    const auto events = experiment::Json::parse(slurp(out / "events.json"));
    EXPECT_TRUE(events["events"].is_array());
}

TEST(Cli, RerunIsByteIdentical) {
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    ASSERT_EQ(run_cli("--config " + config("hardy_check.json") + " --out " + a.string() + " --jobs 1"), 0);
    ASSERT_EQ(run_cli("--config " + config("hardy_check.json") + " --out " + b.string() + " --jobs 3"), 0);
    EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
    const auto c = scratch("det_c");
    ASSERT_EQ(run_cli("--config " + config("hardy_check.json") + " --out " + c.string() + " --seed 8"), 0);
    EXPECT_NE(slurp(a / "report.json"), slurp(c / "report.json"));
}

TEST(Cli, ErrorsExitWithTwo) {
    const auto out = scratch("errors");
    EXPECT_EQ(run_cli("--config " + (out / "missing.json").string() + " --out " + out.string()), 2);
    std::ofstream(out / "bad.json") << R"({"command": "certify", "foo": 1})";
    EXPECT_EQ(run_cli("--config " + (out / "bad.json").string() + " --out " + out.string()), 2);
    EXPECT_EQ(run_cli("solve --config " + config("certify_zero.json") + " --out " + out.string()), 2);
    // Runtime failure: N_A leaves must start outside the support.
    std::ofstream(out / "na.json") << R"({"command": "foliate", "potential": {"kind": "zero", "r_outer": 2},
        "foliate": {"family": "NA", "r_start": 1.5}})";
    EXPECT_EQ(run_cli("--config " + (out / "na.json").string() + " --out " + out.string()), 2);
    const auto report = experiment::Json::parse(slurp(out / "report.json"));
    EXPECT_EQ(report["verdict"], "error");
}
