#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "nfl/scenario.hpp"
#include "nfl/util.hpp"

using namespace nfl;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
    const fs::path dir = fs::path("build") / "scenario_test_tmp";
    fs::create_directories(dir);
    return dir;
}

std::string write_scenario(const std::string& stem, const std::string& body) {
    const fs::path path = scratch_dir() / (stem + ".scn");
    std::ofstream out(path);
    out << body;
    out.close();
    return path.string();
}

// Parse and return the config_error message; fails the test if none is
// thrown.
std::string parse_failure(const std::string& stem, const std::string& body) {
    const std::string path = write_scenario(stem, body);
    try {
        parse_scenario(path);
    } catch (const config_error& e) {
        return e.what();
    }
    FAIL("expected config_error for ", stem);
    return {};
}

const std::string minimal_evolve = R"([scenario]
name = minimal
p = 2

[grid]
dimension = 1
extent = 1.0
points = 33

[kernel]
type = constant
value = 1.0

[coefficients]
a = 1.0
a_minus = 1.0
a_zero = 1.0
b = 1.0
b_zero = 1.0

[firing_rate]
type = zero

[stimulus]
type = zero

[experiment]
type = evolve
tau = 0
t_end = 1
initial_value = 1.0
)";

std::string with_replacement(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

} // namespace

TEST_SUITE("scenario") {
    TEST_CASE("a minimal scenario parses") {
        const std::string path = write_scenario("minimal_ok", minimal_evolve);
        const Scenario s = parse_scenario(path);
        CHECK(s.name == "minimal");
        CHECK(s.p == 2.0);
        CHECK(!s.has_seed);
        CHECK(s.experiment.type == "evolve");
        CHECK(s.grid->node_count() == 33);
        CHECK(scenario_time_window(s) == std::pair<double, double>{0.0, 1.0});
    }

    TEST_CASE("unknown keys are rejected with their location") {
        const std::string msg = parse_failure(
            "unknown_key", with_replacement(minimal_evolve, "t_end = 1", "t_end = 1\nbogus = 3"));
        CHECK(msg.find("bogus") != std::string::npos);
        CHECK(msg.find(":31:") != std::string::npos);
        CHECK(msg.find("[experiment]") != std::string::npos);
    }

    TEST_CASE("duplicate keys are rejected with the line number") {
        const std::string msg = parse_failure(
            "dup_key", with_replacement(minimal_evolve, "p = 2", "p = 2\np = 3"));
        CHECK(msg.find("duplicate") != std::string::npos);
        CHECK(msg.find(":4:") != std::string::npos);
    }

    TEST_CASE("unknown sections are rejected") {
        const std::string msg =
            parse_failure("unknown_section", minimal_evolve + "\n[extras]\nfoo = 1\n");
        CHECK(msg.find("[extras]") != std::string::npos);
    }

    TEST_CASE("missing sections are named") {
        std::string body = minimal_evolve;
        const auto pos = body.find("[kernel]");
        const auto end = body.find("[coefficients]");
        body.erase(pos, end - pos);
        const std::string msg = parse_failure("missing_kernel", body);
        CHECK(msg.find("kernel") != std::string::npos);
    }

    TEST_CASE("bad expressions carry the key location") {
        const std::string msg = parse_failure(
            "bad_expr", with_replacement(minimal_evolve, "a = 1.0", "a = 1.0 +"));
        CHECK(msg.find("[coefficients]") != std::string::npos);
        CHECK(msg.find("a") != std::string::npos);
    }

    TEST_CASE("unknown experiment types are rejected") {
        const std::string msg = parse_failure(
            "bad_type", with_replacement(minimal_evolve, "type = evolve", "type = wander"));
        CHECK(msg.find("wander") != std::string::npos);
    }

    TEST_CASE("keys from another experiment type are rejected") {
        const std::string msg = parse_failure(
            "foreign_key",
            with_replacement(minimal_evolve, "t_end = 1", "t_end = 1\nhorizons = 1 2"));
        CHECK(msg.find("horizons") != std::string::npos);
    }

    TEST_CASE("the dissipativity gate fails at parse time for attractor runs") {
        std::string body = minimal_evolve;
        body = with_replacement(body, "type = zero\n\n[stimulus]",
                                "type = linear\nslope = 2.0\n\n[stimulus]");
        body = with_replacement(body,
                                "type = evolve\ntau = 0\nt_end = 1\ninitial_value = 1.0",
                                "type = section\nt = 10\nhorizons = 5 10\nensemble = 4");
        body = with_replacement(body, "name = minimal", "name = gated\nseed = 1");
        const std::string msg = parse_failure("gate", body);
        CHECK(msg.find("k1*b0 >= a_minus") != std::string::npos);
        CHECK(msg.find("attractor experiments disabled") != std::string::npos);
    }

    TEST_CASE("randomized experiments demand a seed at run time") {
        std::string body = minimal_evolve;
        body = with_replacement(body,
                                "type = evolve\ntau = 0\nt_end = 1\ninitial_value = 1.0",
                                "type = section\nt = 10\nhorizons = 5 10\nensemble = 4");
        const std::string path = write_scenario("needs_seed", body);
        const Scenario s = parse_scenario(path);  // parses fine; --seed could still arrive
        RunOptions opt;
        opt.out_dir = (scratch_dir() / "needs_seed_out").string();
        opt.summary_only = true;
        CHECK_THROWS_AS(run_experiment(s, opt), config_error);
    }

    TEST_CASE("nonpositive dt is rejected") {
        const std::string msg = parse_failure(
            "bad_dt", minimal_evolve + "\n[integrator]\nscheme = rk4\ndt = 0\n");
        CHECK(msg.find("dt") != std::string::npos);
    }

    TEST_CASE("perturbation section is required for continuity runs") {
        std::string body = minimal_evolve;
        body = with_replacement(body,
                                "type = evolve\ntau = 0\nt_end = 1\ninitial_value = 1.0",
                                "type = continuity\ntau = 0\nL = 2\nlevels = 0.1 0.05");
        const std::string msg = parse_failure("no_perturbation", body);
        CHECK(msg.find("perturbation") != std::string::npos);
    }

    TEST_CASE("a shipped scenario runs green through the library entry point") {
        const Scenario s = parse_scenario("scenarios/pure_decay.scn");
        RunOptions opt;
        opt.out_dir = (scratch_dir() / "pure_decay_out").string();
        const int rc = run_experiment(s, opt);
        CHECK(rc == 0);
        CHECK(fs::exists(fs::path(opt.out_dir) / "summary.txt"));
        CHECK(fs::exists(fs::path(opt.out_dir) / "trajectory_norms.csv"));
        std::ifstream in(fs::path(opt.out_dir) / "summary.txt");
        std::string line;
        REQUIRE(std::getline(in, line));
        CHECK(line.find("scenario=pure_decay") != std::string::npos);
        CHECK(line.find("pass=true") != std::string::npos);
    }

    TEST_CASE("a broken certificate fails validation with exit style 1") {
        const Scenario s = parse_scenario("scenarios/broken_certificate.scn");
        const int rc = run_validate(s, (scratch_dir() / "broken_out").string());
        CHECK(rc == 1);
        std::ifstream in(scratch_dir() / "broken_out" / "summary.txt");
        std::string line;
        REQUIRE(std::getline(in, line));
        CHECK(line.find("first_failure=Cf1") != std::string::npos);
    }

    TEST_CASE("the gate message matches for the shipped violation scenario") {
        try {
            parse_scenario("scenarios/gate_violation.scn");
            FAIL("expected config_error");
        } catch (const config_error& e) {
            CHECK(std::string(e.what()).find("k1*b0 >= a_minus") != std::string::npos);
        }
    }
}
