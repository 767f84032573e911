// semilin: config-driven experiments for radial semilinear equations.
//
//   semilin [COMMAND] --config PATH [--out DIR] [--jobs N] [--seed S]
//
// Exit codes: 0 pass/certified/found, 1 not certified/not found, 2 error.

#include <iostream>

#include <CLI11.hpp>

#include "experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Minimizer, conjugate-point and foliation experiments for radial semilinear equations"};
    std::string command;
    std::string config_path;
    std::string out_dir = "out";
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed;
    app.add_option("command", command, "Optional; must match the config's command when given")
        ->check(CLI::IsMember({"certify", "solve", "scan-conjugate", "foliate", "rigidity-scaling", "example446",
                               "hardy-check"}));
    app.add_option("--config", config_path, "Experiment config (JSON)")->required();
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
    app.add_option("--seed", seed, "Overrides the config seed");
    app.add_flag_callback("--version", [] {
        std::cout << "semilin " << experiment::kToolVersion << "\n";
        throw CLI::Success();
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    experiment::Config cfg;
    try {
        cfg = experiment::load_config(config_path);
        if (!command.empty() && command != cfg.command)
            throw experiment::ConfigError("command '" + command + "' does not match config command '" +
                                          cfg.command + "'");
    } catch (const std::exception& e) {
        std::cerr << "semilin: " << e.what() << "\n";
        return 2;
    }
    cfg.jobs = jobs;
    if (seed) cfg.seed = *seed;

    try {
        const auto result = experiment::run_command(cfg);
        experiment::emit(out_dir, result.report, result.files);
        std::cout << cfg.command << ": " << result.report["verdict"].get<std::string>() << "\n";
        return result.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "semilin: " << cfg.command << ": " << e.what() << "\n";
        try {
            experiment::emit(out_dir, experiment::error_report(cfg.command, e.what()), {});
        } catch (const std::exception&) {
        }
        return 2;
    }
}
