#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nfl/attractor.hpp"
#include "nfl/dynamics.hpp"
#include "nfl/integrator.hpp"
#include "nfl/kernel.hpp"

namespace nfl {

// One [experiment] block. Only the fields relevant to the chosen type are
// populated; the parser rejects keys the type does not use.
struct ExperimentConfig {
    std::string type;

    double tau = 0.0;
    double t_end = 0.0;
    double t = 0.0;
    double L = 0.0;
    double t0 = 0.0;
    double t1 = 10.0;

    double initial_value = 0.0;
    bool has_initial_radius = false;
    double initial_radius = 0.0;
    int members = 1;
    std::int64_t store_every = 1;

    std::vector<double> deltas;
    std::vector<double> horizons;
    int ensemble = 0;
    std::vector<double> levels;
    double horizon = 0.0;
    int trials = 0;
    std::vector<double> p_values;

    // assertions; absent unless the scenario states them
    bool has_expect_uniform = false;
    Expr expect_uniform = Expr::constant(0.0); // evaluated at the final time
    bool has_expect_scaled_initial = false;
    Expr expect_scaled_initial = Expr::constant(0.0);
    double expect_tolerance = 0.0;
    bool has_expect_last_gap = false;
    double expect_last_gap = 0.0;
    bool has_expect_linear = false;
    double expect_linear_coefficient = 0.0;
};

struct Scenario {
    std::string name;
    std::string source_path;
    bool has_seed = false;
    std::uint64_t seed = 0;
    double p = 2.0;
    double delta = 1.0;
    double h = 0.0;
    GridPtr grid;
    Kernel kernel;
    CoefficientPair coeff;
    FiringRate fire;
    Stimulus stim;
    bool has_perturbation = false;
    Stimulus perturbation;
    Scheme scheme = Scheme::exponential_euler;
    double dt = 0.01;
    ExperimentConfig experiment;
};

// Reads and fully validates a scenario file (sectioned key-value text).
// Syntax errors carry the line number; semantic errors name the violated
// invariant. The dissipativity gate k1 b0 < a_minus is checked here for
// attractor experiments, before anything runs.
Scenario parse_scenario(const std::string& path);

ModelSpec scenario_model(const Scenario& s);
ProcessHandle scenario_process(const Scenario& s);

// Time window the experiment touches; used by certificate validation.
std::pair<double, double> scenario_time_window(const Scenario& s);

struct RunOptions {
    std::string out_dir;
    bool summary_only = false;
};

// Dispatches the scenario's experiment, writes artifacts and a one-line
// summary into out_dir, echoes the summary to stdout. Returns 0 when every
// assertion passed and 1 otherwise. Configuration problems and mid-run
// hard failures (blow-up, violated coefficient certificates) throw.
int run_experiment(const Scenario& s, const RunOptions& opt);

// The `validate` verb: certificate report for any scenario. Returns 0/1.
int run_validate(const Scenario& s, const std::string& out_dir);

// The `norms` verb: kernel norm and row-sum report. Returns 0.
int run_norms(const Scenario& s, const std::string& out_dir);

} // namespace nfl
