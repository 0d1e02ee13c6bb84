#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nfl/scenario.hpp"
#include "nfl/util.hpp"

// Exit codes: 0 all assertions passed, 1 an executed check failed,
// 2 the scenario or invocation is malformed.
int main(int argc, char** argv) {
    CLI::App app{"nonlocal field laboratory"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir;
    bool summary_only = false;
    double dt_override = 0.0;
    std::uint64_t seed_override = 0;
    bool has_dt = false;
    bool has_seed = false;

    auto* run = app.add_subcommand("run", "run a scenario's experiment");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--out", out_dir, "artifact directory")->required();
    run->add_flag("--summary-only", summary_only, "skip per-stamp CSV artifacts");
    run->add_option("--dt", dt_override, "override the integrator step")
        ->check(CLI::PositiveNumber);
    run->add_option("--seed", seed_override, "override the scenario seed");

    auto* validate = app.add_subcommand("validate", "sample every certificate of a scenario");
    validate->add_option("scenario", scenario_path, "scenario file")->required();
    validate->add_option("--out", out_dir, "artifact directory (optional)");

    auto* norms = app.add_subcommand("norms", "kernel norm and row-sum report");
    norms->add_option("scenario", scenario_path, "scenario file")->required();
    norms->add_option("--out", out_dir, "artifact directory (optional)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    has_dt = run->count("--dt") > 0;
    has_seed = run->count("--seed") > 0;

    try {
        nfl::Scenario s = nfl::parse_scenario(scenario_path);
        if (has_dt) s.dt = dt_override;
        if (has_seed) {
            s.seed = seed_override;
            s.has_seed = true;
        }
        if (run->parsed()) {
            nfl::RunOptions opt;
            opt.out_dir = out_dir;
            opt.summary_only = summary_only;
            return nfl::run_experiment(s, opt);
        }
        if (validate->parsed()) return nfl::run_validate(s, out_dir);
        return nfl::run_norms(s, out_dir);
    } catch (const nfl::config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const nfl::check_failure& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return 1;
    }
}
