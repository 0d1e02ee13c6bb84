#include "nfl/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nfl/csv.hpp"
#include "nfl/rng.hpp"
#include "nfl/util.hpp"

namespace nfl {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct IniValue {
    std::string text;
    int line = 0;
    bool used = false;
};

struct IniSection {
    int line = 0;
    std::map<std::string, IniValue> kv;
};

struct IniFile {
    std::string path;
    std::map<std::string, IniSection> sections;
};

std::string at_line(const std::string& path, int line) {
    return path + ":" + std::to_string(line);
}

IniFile read_ini(const std::string& path) {
    auto in = open_input(path);
    IniFile file;
    file.path = path;
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw config_error(at_line(path, lineno) + ": unterminated section header");
            current = trim(s.substr(1, s.size() - 2));
            if (current.empty())
                throw config_error(at_line(path, lineno) + ": empty section name");
            if (file.sections.count(current))
                throw config_error(at_line(path, lineno) + ": duplicate section [" + current +
                                   "]");
            file.sections[current].line = lineno;
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw config_error(at_line(path, lineno) + ": expected 'key = value' or a section header");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw config_error(at_line(path, lineno) + ": empty key");
        if (current.empty())
            throw config_error(at_line(path, lineno) + ": key '" + key +
                               "' appears before any section header");
        auto& sec = file.sections[current];
        if (sec.kv.count(key))
            throw config_error(at_line(path, lineno) + ": duplicate key '" + key + "' in [" +
                               current + "]");
        sec.kv[key] = IniValue{value, lineno, false};
    }
    return file;
}

// Typed access to one section with consumed-key tracking, so anything a
// parser did not ask for is rejected by name and line.
class SectionReader {
public:
    SectionReader(IniFile& file, std::string name, bool required)
        : file_(&file), name_(std::move(name)) {
        auto it = file.sections.find(name_);
        if (it != file.sections.end()) {
            sec_ = &it->second;
        } else if (required) {
            throw config_error(file.path + ": missing required section [" + name_ + "]");
        }
    }

    bool present() const { return sec_ != nullptr; }
    bool has(const std::string& key) const { return sec_ && sec_->kv.count(key); }

    std::string get_string(const std::string& key) {
        IniValue* v = fetch(key);
        if (!v) throw missing(key);
        return v->text;
    }

    std::string get_string(const std::string& key, const std::string& fallback) {
        IniValue* v = fetch(key);
        return v ? v->text : fallback;
    }

    double get_double(const std::string& key) {
        IniValue* v = fetch(key);
        if (!v) throw missing(key);
        return parse_double(v->text, location(key, *v));
    }

    double get_double(const std::string& key, double fallback) {
        IniValue* v = fetch(key);
        return v ? parse_double(v->text, location(key, *v)) : fallback;
    }

    std::int64_t get_int(const std::string& key) {
        IniValue* v = fetch(key);
        if (!v) throw missing(key);
        return to_int(*v, key);
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) {
        IniValue* v = fetch(key);
        return v ? to_int(*v, key) : fallback;
    }

    std::uint64_t get_uint(const std::string& key) {
        IniValue* v = fetch(key);
        if (!v) throw missing(key);
        const std::int64_t n = to_int(*v, key);
        if (n < 0)
            throw config_error(location(key, *v) + ": value must be non-negative");
        return static_cast<std::uint64_t>(n);
    }

    Expr get_expr(const std::string& key) {
        IniValue* v = fetch(key);
        if (!v) throw missing(key);
        return to_expr(*v, key);
    }

    Expr get_expr(const std::string& key, const Expr& fallback) {
        IniValue* v = fetch(key);
        return v ? to_expr(*v, key) : fallback;
    }

    std::vector<double> get_list(const std::string& key) {
        IniValue* v = fetch(key);
        if (!v) throw missing(key);
        return to_list(*v, key);
    }

    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) {
        IniValue* v = fetch(key);
        return v ? to_list(*v, key) : fallback;
    }

    // Call once all expected keys were read; leftovers are errors.
    void finish() const {
        if (!sec_) return;
        for (const auto& [key, value] : sec_->kv) {
            if (!value.used)
                throw config_error(location(key, value) + ": unknown key '" + key + "' in [" +
                                   name_ + "]");
        }
    }

    std::string location(const std::string& key, const IniValue& v) const {
        return at_line(file_->path, v.line) + ": [" + name_ + "] " + key;
    }

private:
    IniValue* fetch(const std::string& key) {
        if (!sec_) return nullptr;
        auto it = sec_->kv.find(key);
        if (it == sec_->kv.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    config_error missing(const std::string& key) const {
        return config_error(file_->path + ": [" + name_ + "] is missing required key '" + key +
                            "'");
    }

    std::int64_t to_int(const IniValue& v, const std::string& key) const {
        const double d = parse_double(v.text, location(key, v));
        if (std::floor(d) != d || std::abs(d) > 9e15)
            throw config_error(location(key, v) + ": expected an integer");
        return static_cast<std::int64_t>(d);
    }

    Expr to_expr(const IniValue& v, const std::string& key) const {
        try {
            return Expr::parse(v.text);
        } catch (const config_error& e) {
            throw config_error(location(key, v) + ": " + e.what());
        }
    }

    std::vector<double> to_list(const IniValue& v, const std::string& key) const {
        std::istringstream in(v.text);
        std::vector<double> out;
        std::string token;
        while (in >> token) out.push_back(parse_double(token, location(key, v)));
        if (out.empty())
            throw config_error(location(key, v) + ": expected at least one value");
        return out;
    }

    IniFile* file_;
    IniSection* sec_ = nullptr;
    std::string name_;
};

GridPtr parse_grid(IniFile& file) {
    SectionReader r(file, "grid", true);
    const int dim = static_cast<int>(r.get_int("dimension"));
    std::vector<double> extents;
    std::vector<std::int64_t> points;
    if (dim == 1) {
        extents.push_back(r.get_double("extent"));
        points.push_back(r.get_int("points"));
    } else if (dim == 2) {
        extents.push_back(r.get_double("extent_x"));
        extents.push_back(r.get_double("extent_y"));
        points.push_back(r.get_int("points_x"));
        points.push_back(r.get_int("points_y"));
    } else {
        throw config_error(file.path + ": [grid] dimension must be 1 or 2");
    }
    r.finish();
    return Grid::make(dim, std::move(extents), std::move(points));
}

Kernel parse_kernel(IniFile& file, const GridPtr& grid, const std::string& scenario_path) {
    SectionReader r(file, "kernel", true);
    const std::string type = r.get_string("type");
    Kernel kernel = [&] {
        if (type == "constant") return Kernel::constant(grid, r.get_double("value"));
        if (type == "gaussian")
            return Kernel::gaussian(grid, r.get_double("sigma"), r.get_double("amplitude", 1.0));
        if (type == "mexican_hat")
            return Kernel::mexican_hat(grid, r.get_double("sigma_e"), r.get_double("amp_e"),
                                       r.get_double("sigma_i"), r.get_double("amp_i"));
        if (type == "bump")
            return Kernel::bump(grid, r.get_double("radius"), r.get_double("amplitude", 1.0));
        if (type == "csv") {
            const std::filesystem::path rel(r.get_string("path"));
            const auto resolved =
                rel.is_absolute() ? rel : std::filesystem::path(scenario_path).parent_path() / rel;
            return Kernel::load_csv(grid, resolved.string());
        }
        throw config_error(file.path +
                           ": [kernel] unknown type '" + type +
                           "' (expected constant, gaussian, mexican_hat, bump, or csv)");
    }();
    r.finish();
    return kernel;
}

CoefficientPair parse_coefficients(IniFile& file) {
    SectionReader r(file, "coefficients", true);
    CoefficientPair c;
    c.a = r.get_expr("a");
    c.b = r.get_expr("b");
    c.a_minus = r.get_double("a_minus");
    c.a_zero = r.get_double("a_zero");
    c.b_zero = r.get_double("b_zero");
    r.finish();
    return c;
}

FiringRate parse_firing(IniFile& file, double p) {
    SectionReader r(file, "firing_rate", true);
    const std::string type = r.get_string("type");
    FiringRate fire = [&] {
        if (type == "zero") return firing_zero(p);
        if (type == "linear") return firing_linear(p, r.get_double("slope"), 0.0);
        if (type == "tanh")
            return firing_tanh(p, r.get_double("gain"), r.get_double("amplitude"),
                               r.get_double("k1"));
        if (type == "logistic")
            return firing_logistic(p, r.get_double("beta"), r.get_double("amplitude"),
                                   r.get_double("k1"));
        if (type == "ramp")
            return firing_ramp(p, r.get_double("slope"), r.get_double("saturation"),
                               r.get_double("k1"));
        if (type == "power_sigmoid") return firing_power_sigmoid(p);
        if (type == "cubic") return firing_cubic(p);
        throw config_error(file.path + ": [firing_rate] unknown type '" + type +
                           "' (expected zero, linear, tanh, logistic, ramp, power_sigmoid, or "
                           "cubic)");
    }();
    // Certificate overrides. They replace the built-in constants and are
    // themselves subject to the validator, so a scenario can claim tighter
    // (or deliberately wrong) certificates without touching f itself.
    if (r.has("c1")) fire.C1 = r.get_expr("c1");
    if (r.has("c2")) fire.C2 = r.get_expr("c2");
    if (r.has("k2")) fire.k2 = r.get_expr("k2");
    if (r.has("k1")) fire.k1 = r.get_double("k1");
    r.finish();
    return fire;
}

Stimulus parse_stimulus_section(IniFile& file, const std::string& section, bool required) {
    SectionReader r(file, section, required);
    if (!r.present()) return stimulus_zero();
    const std::string type = r.get_string("type");
    Stimulus stim = [&] {
        if (type == "zero") return stimulus_zero();
        if (type == "constant") return stimulus_constant(r.get_double("value"));
        if (type == "gaussian_bump")
            return stimulus_gaussian_bump(r.get_double("amplitude"), r.get_double("cx"),
                                          r.get_double("cy", 0.0), r.get_double("width"));
        if (type == "moving_bump")
            return stimulus_moving_bump(r.get_double("amplitude"), r.get_double("cx"),
                                        r.get_double("cy", 0.0), r.get_double("width"),
                                        r.get_double("vx"), r.get_double("vy", 0.0));
        if (type == "sinusoid")
            return stimulus_sinusoid(r.get_double("amplitude"), r.get_double("omega"),
                                     r.get_double("phase", 0.0));
        throw config_error(file.path + ": [" + section + "] unknown type '" + type +
                           "' (expected zero, constant, gaussian_bump, moving_bump, or sinusoid)");
    }();
    if (r.has("certified_norm")) stim.certified_norm_override = r.get_double("certified_norm");
    r.finish();
    return stim;
}

const char* const kExperimentTypes =
    "evolve, envelope, section, continuity, upper_semicontinuity, kernel_bounds, validate";

ExperimentConfig parse_experiment(IniFile& file, double scenario_delta) {
    SectionReader r(file, "experiment", true);
    ExperimentConfig e;
    e.type = r.get_string("type");

    auto read_expect_tolerance = [&] {
        if (!r.has("expect_tolerance"))
            throw config_error(file.path +
                               ": [experiment] assertions need expect_tolerance alongside the "
                               "expected value");
        e.expect_tolerance = r.get_double("expect_tolerance");
    };

    if (e.type == "evolve") {
        e.tau = r.get_double("tau", 0.0);
        e.t_end = r.get_double("t_end");
        e.initial_value = r.get_double("initial_value", 0.0);
        e.store_every = r.get_int("store_every", 1);
        if (e.store_every < 1)
            throw config_error(file.path + ": [experiment] store_every must be >= 1");
        if (r.has("expect_uniform")) {
            e.has_expect_uniform = true;
            e.expect_uniform = r.get_expr("expect_uniform");
        }
        if (r.has("expect_scaled_initial")) {
            e.has_expect_scaled_initial = true;
            e.expect_scaled_initial = r.get_expr("expect_scaled_initial");
        }
        if (e.has_expect_uniform || e.has_expect_scaled_initial) read_expect_tolerance();
    } else if (e.type == "envelope") {
        e.tau = r.get_double("tau", 0.0);
        e.t_end = r.get_double("t_end");
        e.members = static_cast<int>(r.get_int("members", 1));
        if (e.members < 1)
            throw config_error(file.path + ": [experiment] members must be >= 1");
        if (r.has("initial_radius")) {
            e.has_initial_radius = true;
            e.initial_radius = r.get_double("initial_radius");
            if (!(e.initial_radius > 0.0))
                throw config_error(file.path + ": [experiment] initial_radius must be positive");
        } else {
            e.initial_value = r.get_double("initial_value", 0.0);
            if (e.members != 1)
                throw config_error(file.path +
                                   ": [experiment] members > 1 needs initial_radius (identical "
                                   "constant starts are one member)");
        }
        e.deltas = r.get_list("deltas", {scenario_delta});
        for (double d : e.deltas)
            if (!(d > 0.0))
                throw config_error(file.path + ": [experiment] deltas must be positive");
    } else if (e.type == "section") {
        e.t = r.get_double("t");
        e.horizons = r.get_list("horizons");
        e.ensemble = static_cast<int>(r.get_int("ensemble"));
        if (r.has("expect_uniform")) {
            e.has_expect_uniform = true;
            e.expect_uniform = r.get_expr("expect_uniform");
            read_expect_tolerance();
        }
        if (r.has("expect_last_gap")) {
            e.has_expect_last_gap = true;
            e.expect_last_gap = r.get_double("expect_last_gap");
        }
    } else if (e.type == "continuity") {
        e.tau = r.get_double("tau", 0.0);
        e.L = r.get_double("L");
        if (!(e.L > 0.0)) throw config_error(file.path + ": [experiment] L must be positive");
        e.initial_value = r.get_double("initial_value", 0.0);
        e.levels = r.get_list("levels", {1.0});
        for (double c : e.levels)
            if (!(c > 0.0))
                throw config_error(file.path + ": [experiment] levels must be positive");
    } else if (e.type == "upper_semicontinuity") {
        e.t = r.get_double("t");
        e.levels = r.get_list("levels");
        e.horizon = r.get_double("horizon");
        e.ensemble = static_cast<int>(r.get_int("ensemble"));
        if (r.has("expect_linear_coefficient")) {
            e.has_expect_linear = true;
            e.expect_linear_coefficient = r.get_double("expect_linear_coefficient");
            read_expect_tolerance();
        }
    } else if (e.type == "kernel_bounds") {
        e.trials = static_cast<int>(r.get_int("trials", 200));
        if (e.trials < 1)
            throw config_error(file.path + ": [experiment] trials must be >= 1");
        e.p_values = r.get_list("p_values", {1.0, 2.0, 4.0});
        for (double pv : e.p_values)
            if (!(pv >= 1.0))
                throw config_error(file.path + ": [experiment] p_values must satisfy p >= 1");
    } else if (e.type == "validate") {
        e.t0 = r.get_double("t0", 0.0);
        e.t1 = r.get_double("t1", 10.0);
        if (!(e.t1 > e.t0))
            throw config_error(file.path + ": [experiment] t1 must exceed t0");
    } else {
        throw config_error(file.path + ": [experiment] unknown type '" + e.type + "' (expected " +
                           kExperimentTypes + ")");
    }
    r.finish();
    return e;
}

bool experiment_randomized(const ExperimentConfig& e) {
    if (e.type == "envelope") return e.has_initial_radius;
    return e.type == "section" || e.type == "upper_semicontinuity" || e.type == "kernel_bounds";
}

bool experiment_needs_gate(const std::string& type) {
    return type == "envelope" || type == "section" || type == "upper_semicontinuity";
}

Field constant_field(const GridPtr& grid, double value) {
    return Field(grid, std::vector<double>(static_cast<std::size_t>(grid->node_count()), value));
}

// Draw in the L^p ball: nodewise uniform signs and magnitudes, then scaled
// to a uniformly random fraction of the radius. Stream k never collides
// with other members' streams.
Field random_ball_field(const GridPtr& grid, double p, double radius, std::uint64_t seed,
                        std::uint64_t stream) {
    Rng rng(seed, stream);
    std::vector<double> vals(static_cast<std::size_t>(grid->node_count()));
    for (auto& v : vals) v = rng.uniform(-1.0, 1.0);
    Field f(grid, std::move(vals));
    const double norm = lp_norm(f, p);
    const double target = radius * rng.uniform();
    if (norm > 0.0) {
        const double scale = target / norm;
        for (std::int64_t i = 0; i < f.size(); ++i) f[i] *= scale;
    }
    return f;
}

class SummaryLine {
public:
    SummaryLine& add(const std::string& key, const std::string& value) {
        if (!line_.empty()) line_ += ' ';
        line_ += key + '=' + value;
        return *this;
    }
    SummaryLine& add(const std::string& key, const char* value) {
        return add(key, std::string(value));
    }
    SummaryLine& add(const std::string& key, double value) {
        return add(key, format_double(value));
    }
    SummaryLine& add(const std::string& key, bool value) {
        return add(key, value ? std::string("true") : std::string("false"));
    }
    SummaryLine& add(const std::string& key, std::int64_t value) {
        return add(key, std::to_string(value));
    }
    SummaryLine& add(const std::string& key, int value) {
        return add(key, static_cast<std::int64_t>(value));
    }
    const std::string& str() const { return line_; }

private:
    std::string line_;
};

std::string join_doubles(const std::vector<double>& vs) {
    std::string out;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) out += ';';
        out += format_double(vs[i]);
    }
    return out;
}

void emit_summary(const std::string& out_dir, const SummaryLine& line) {
    if (!out_dir.empty()) {
        auto out = open_output((std::filesystem::path(out_dir) / "summary.txt").string());
        out << line.str() << "\n";
    }
    std::cout << line.str() << "\n";
}

std::string artifact(const RunOptions& opt, const std::string& name) {
    return (std::filesystem::path(opt.out_dir) / name).string();
}

int run_evolve(const Scenario& s, const RunOptions& opt) {
    const auto& e = s.experiment;
    const auto h = scenario_process(s);
    const Field u0 = constant_field(s.grid, e.initial_value);
    const Trajectory traj = evolve(h, e.tau, e.t_end, u0, e.store_every);
    if (!opt.summary_only) {
        write_trajectory_csv(traj, artifact(opt, "trajectory.csv"));
        write_trajectory_norms_csv(traj, artifact(opt, "trajectory_norms.csv"));
    }

    bool pass = true;
    double uniform_value = 0.0;
    double sup_gap = 0.0;
    double scale = 0.0;
    double relative_error = 0.0;
    if (e.has_expect_uniform) {
        uniform_value = e.expect_uniform(e.t_end);
        sup_gap = sup_norm_gap(traj.fields.back(), constant_field(s.grid, uniform_value));
        pass = pass && sup_gap <= e.expect_tolerance;
    }
    if (e.has_expect_scaled_initial) {
        scale = e.expect_scaled_initial(e.t_end);
        Field target = u0;
        for (std::int64_t i = 0; i < target.size(); ++i) target[i] *= scale;
        const double ref = lp_norm(target, s.p);
        relative_error = lp_distance(traj.fields.back(), target, s.p) / (ref > 0.0 ? ref : 1.0);
        pass = pass && relative_error <= e.expect_tolerance;
    }

    SummaryLine line;
    line.add("experiment", e.type)
        .add("scenario", s.name)
        .add("pass", pass)
        .add("final_time", traj.times.back())
        .add("final_norm", traj.norms.back())
        .add("stamps", static_cast<std::int64_t>(traj.times.size()));
    if (e.has_expect_uniform)
        line.add("expected_uniform", uniform_value)
            .add("sup_gap", sup_gap)
            .add("tolerance", e.expect_tolerance);
    if (e.has_expect_scaled_initial)
        line.add("scale", scale)
            .add("relative_error", relative_error)
            .add("tolerance", e.expect_tolerance);
    emit_summary(opt.out_dir, line);
    return pass ? 0 : 1;
}

int run_envelope(const Scenario& s, const RunOptions& opt) {
    const auto& e = s.experiment;
    const auto h = scenario_process(s);

    std::vector<Field> ics;
    ics.reserve(static_cast<std::size_t>(e.members));
    for (int k = 0; k < e.members; ++k) {
        if (e.has_initial_radius) {
            ics.push_back(random_ball_field(s.grid, s.p, e.initial_radius, s.seed,
                                            static_cast<std::uint64_t>(k) + 1));
        } else {
            ics.push_back(constant_field(s.grid, e.initial_value));
        }
    }

    std::vector<DissipationBudget> budgets;
    budgets.reserve(e.deltas.size());
    for (double d : e.deltas) budgets.push_back(make_budget(h.model, d));

    std::vector<EnvelopeReport> reports(e.deltas.size() * static_cast<std::size_t>(e.members));
    for (std::size_t di = 0; di < e.deltas.size(); ++di) {
        parallel_for_index(e.members, [&](std::int64_t k) {
            reports[di * static_cast<std::size_t>(e.members) + static_cast<std::size_t>(k)] =
                decay_envelope_check(h, budgets[di], e.tau, e.t_end, ics[static_cast<std::size_t>(k)]);
        });
    }

    bool pass = true;
    double min_margin = std::numeric_limits<double>::infinity();
    double witness_delta = e.deltas.front();
    int witness_member = 0;
    double witness_time = e.tau;
    bool all_entered = true;
    double max_entry_time = e.tau;
    bool any_re_exit = false;
    for (std::size_t di = 0; di < e.deltas.size(); ++di) {
        for (int k = 0; k < e.members; ++k) {
            const auto& rep = reports[di * static_cast<std::size_t>(e.members) +
                                      static_cast<std::size_t>(k)];
            pass = pass && rep.pass;
            if (rep.min_margin < min_margin) {
                min_margin = rep.min_margin;
                witness_delta = e.deltas[di];
                witness_member = k;
                witness_time = rep.witness_time;
            }
            all_entered = all_entered && rep.entered;
            if (rep.entered) max_entry_time = std::max(max_entry_time, rep.entry_time);
            any_re_exit = any_re_exit || rep.re_exited;
        }
    }
    if (!std::isfinite(min_margin)) min_margin = 0.0;

    if (!opt.summary_only) {
        auto out = open_output(artifact(opt, "envelope.csv"));
        out << "delta,member,t,norm,envelope,radius,outside\n";
        for (std::size_t di = 0; di < e.deltas.size(); ++di) {
            for (int k = 0; k < e.members; ++k) {
                const auto& rep = reports[di * static_cast<std::size_t>(e.members) +
                                          static_cast<std::size_t>(k)];
                for (const auto& row : rep.rows) {
                    out << format_double(e.deltas[di]) << ',' << k << ','
                        << format_double(row.t) << ',' << format_double(row.norm) << ','
                        << format_double(row.envelope) << ',' << format_double(row.radius) << ','
                        << (row.outside ? 1 : 0) << "\n";
                }
            }
        }
    }

    SummaryLine line;
    line.add("experiment", e.type)
        .add("scenario", s.name)
        .add("pass", pass)
        .add("deltas", join_doubles(e.deltas))
        .add("members", e.members)
        .add("min_margin", min_margin)
        .add("witness_delta", witness_delta)
        .add("witness_member", witness_member)
        .add("witness_time", witness_time)
        .add("all_entered", all_entered)
        .add("max_entry_time", max_entry_time)
        .add("re_exited", any_re_exit);
    emit_summary(opt.out_dir, line);
    return pass ? 0 : 1;
}

int run_section(const Scenario& s, const RunOptions& opt) {
    const auto& e = s.experiment;
    const auto h = scenario_process(s);
    const auto budget = make_budget(h.model, s.delta);
    const auto section = sample_attractor_section(h, budget, e.t, e.horizons, e.ensemble, s.seed);

    bool pass = section.contained;
    double max_sup_gap = 0.0;
    if (e.has_expect_uniform) {
        const double v = e.expect_uniform(e.t);
        const Field target = constant_field(s.grid, v);
        for (const auto& member : section.members)
            max_sup_gap = std::max(max_sup_gap, sup_norm_gap(member, target));
        pass = pass && max_sup_gap <= e.expect_tolerance;
    }
    if (e.has_expect_last_gap) pass = pass && section.last_gap <= e.expect_last_gap;

    if (!opt.summary_only) {
        {
            auto out = open_output(artifact(opt, "section_members.csv"));
            out << "member,node_index,value\n";
            for (std::size_t m = 0; m < section.members.size(); ++m) {
                const auto& f = section.members[m];
                for (std::int64_t i = 0; i < f.size(); ++i)
                    out << m << ',' << i << ',' << format_double(f[i]) << "\n";
            }
        }
        {
            auto out = open_output(artifact(opt, "section_gaps.csv"));
            out << "horizon_from,horizon_to,gap\n";
            for (std::size_t g = 0; g + 1 < section.horizons.size(); ++g)
                out << format_double(section.horizons[g]) << ','
                    << format_double(section.horizons[g + 1]) << ','
                    << format_double(section.gaps[g]) << "\n";
        }
    }

    SummaryLine line;
    line.add("experiment", e.type)
        .add("scenario", s.name)
        .add("pass", pass)
        .add("t", section.t)
        .add("horizons", join_doubles(section.horizons))
        .add("gaps", join_doubles(section.gaps))
        .add("last_gap", section.last_gap)
        .add("members", static_cast<std::int64_t>(section.members.size()))
        .add("max_member_norm", section.max_member_norm)
        .add("radius_at_t", section.radius_at_t)
        .add("contained", section.contained)
        .add("converged", section.converged);
    if (e.has_expect_uniform)
        line.add("expected_uniform", e.expect_uniform(e.t))
            .add("max_sup_gap", max_sup_gap)
            .add("tolerance", e.expect_tolerance);
    if (e.has_expect_last_gap) line.add("expect_last_gap", e.expect_last_gap);
    emit_summary(opt.out_dir, line);
    return pass ? 0 : 1;
}

int run_continuity(const Scenario& s, const RunOptions& opt) {
    const auto& e = s.experiment;
    const auto h = scenario_process(s);
    const Field u0 = constant_field(s.grid, e.initial_value);

    std::vector<ContinuityReport> reports;
    reports.reserve(e.levels.size());
    for (double c : e.levels) {
        const Stimulus perturbed = stimulus_sum(s.stim, s.perturbation, c);
        reports.push_back(continuity_gap(h, perturbed, s.stim, e.tau, e.tau + e.L, u0));
    }

    bool pass = true;
    double min_margin = std::numeric_limits<double>::infinity();
    double witness_level = e.levels.front();
    double witness_time = e.tau;
    std::vector<double> final_gaps;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        pass = pass && reports[i].pass;
        if (reports[i].min_margin < min_margin) {
            min_margin = reports[i].min_margin;
            witness_level = e.levels[i];
            witness_time = reports[i].witness_time;
        }
        final_gaps.push_back(reports[i].rows.back().gap);
    }
    if (!std::isfinite(min_margin)) min_margin = 0.0;

    // The gap is asymptotically linear in the level, so consecutive levels
    // must reproduce their ratio. 10% covers the nonlinear remainder.
    std::vector<double> ratios;
    bool ratios_ok = true;
    for (std::size_t i = 0; i + 1 < e.levels.size(); ++i) {
        if (final_gaps[i + 1] <= 0.0) continue;
        const double measured = final_gaps[i] / final_gaps[i + 1];
        const double expected = e.levels[i] / e.levels[i + 1];
        ratios.push_back(measured);
        ratios_ok = ratios_ok && std::abs(measured / expected - 1.0) <= 0.10;
    }
    pass = pass && ratios_ok;

    if (!opt.summary_only) {
        for (std::size_t i = 0; i < reports.size(); ++i) {
            auto out =
                open_output(artifact(opt, "continuity_level" + std::to_string(i) + ".csv"));
            out << "t,gap,majorant,ratio\n";
            for (const auto& row : reports[i].rows)
                out << format_double(row.t) << ',' << format_double(row.gap) << ','
                    << format_double(row.majorant) << ',' << format_double(row.ratio) << "\n";
        }
    }

    SummaryLine line;
    line.add("experiment", e.type)
        .add("scenario", s.name)
        .add("pass", pass)
        .add("levels", join_doubles(e.levels))
        .add("final_gaps", join_doubles(final_gaps))
        .add("gap_ratios", join_doubles(ratios))
        .add("ratios_ok", ratios_ok)
        .add("min_margin", min_margin)
        .add("witness_level", witness_level)
        .add("witness_time", witness_time)
        .add("rho", reports.front().rho)
        .add("stimulus_gap", reports.front().stimulus_gap);
    emit_summary(opt.out_dir, line);
    return pass ? 0 : 1;
}

int run_upper_semicontinuity(const Scenario& s, const RunOptions& opt) {
    const auto& e = s.experiment;
    const auto h = scenario_process(s);
    const auto rep = upper_semicontinuity_curve(h, s.perturbation, e.t, e.levels, s.delta,
                                                e.horizon, e.ensemble, s.seed);

    bool pass = rep.pass;
    double max_linear_err = 0.0;
    if (e.has_expect_linear) {
        for (const auto& row : rep.rows)
            max_linear_err = std::max(
                max_linear_err, std::abs(row.distance - e.expect_linear_coefficient * row.level));
        pass = pass && max_linear_err <= e.expect_tolerance;
    }

    if (!opt.summary_only) {
        auto out = open_output(artifact(opt, "semicontinuity.csv"));
        out << "level,distance\n";
        for (const auto& row : rep.rows)
            out << format_double(row.level) << ',' << format_double(row.distance) << "\n";
    }

    std::vector<double> levels;
    std::vector<double> distances;
    for (const auto& row : rep.rows) {
        levels.push_back(row.level);
        distances.push_back(row.distance);
    }

    SummaryLine line;
    line.add("experiment", e.type)
        .add("scenario", s.name)
        .add("pass", pass)
        .add("levels", join_doubles(levels))
        .add("distances", join_doubles(distances))
        .add("monotone", rep.monotone)
        .add("contracted", rep.contracted)
        .add("witness_level", rep.witness_level);
    if (e.has_expect_linear)
        line.add("linear_coefficient", e.expect_linear_coefficient)
            .add("max_linear_error", max_linear_err)
            .add("tolerance", e.expect_tolerance);
    emit_summary(opt.out_dir, line);
    return pass ? 0 : 1;
}

int run_kernel_bounds(const Scenario& s, const RunOptions& opt) {
    const auto& e = s.experiment;
    std::vector<KernelBoundReport> reports;
    reports.reserve(e.p_values.size());
    for (double pv : e.p_values)
        reports.push_back(verify_kernel_bounds(s.kernel, pv, e.trials, s.seed));

    bool pass = true;
    int total_violations = 0;
    double min_gap = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;
    for (const auto& rep : reports) {
        total_violations += rep.violations;
        pass = pass && rep.violations == 0;
        min_gap = std::min({min_gap, rep.min_gap_sup_q, rep.min_gap_l1, rep.min_gap_lp});
        max_ratio = std::max({max_ratio, rep.max_ratio_sup_q, rep.max_ratio_l1, rep.max_ratio_lp});
    }

    if (!opt.summary_only) {
        auto out = open_output(artifact(opt, "kernel_bounds.csv"));
        out << "p,trials,violations,min_gap_sup_q,min_gap_l1,min_gap_lp,max_ratio_sup_q,"
               "max_ratio_l1,max_ratio_lp\n";
        for (const auto& rep : reports)
            out << format_double(rep.p) << ',' << rep.trials << ',' << rep.violations << ','
                << format_double(rep.min_gap_sup_q) << ',' << format_double(rep.min_gap_l1) << ','
                << format_double(rep.min_gap_lp) << ',' << format_double(rep.max_ratio_sup_q)
                << ',' << format_double(rep.max_ratio_l1) << ','
                << format_double(rep.max_ratio_lp) << "\n";
    }

    SummaryLine line;
    line.add("experiment", e.type)
        .add("scenario", s.name)
        .add("pass", pass)
        .add("kernel", s.kernel.name())
        .add("p_values", join_doubles(e.p_values))
        .add("trials", e.trials)
        .add("violations", total_violations)
        .add("min_gap", min_gap)
        .add("max_ratio", max_ratio);
    emit_summary(opt.out_dir, line);
    return pass ? 0 : 1;
}

int validate_impl(const Scenario& s, double t0, double t1, const std::string& out_dir) {
    const auto model = scenario_model(s);
    ValidateOptions vo;
    if (s.has_seed) vo.seed = s.seed;
    const auto rep = validate_certificates(model, t0, t1, vo);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        auto out =
            open_output((std::filesystem::path(out_dir) / "certificates.csv").string());
        out << "condition,pass,margin,witness_t,witness_x,witness_y\n";
        for (const auto& item : rep.items)
            out << item.condition << ',' << (item.pass ? "true" : "false") << ','
                << format_double(item.margin) << ',' << format_double(item.witness_t) << ','
                << format_double(item.witness_x) << ',' << format_double(item.witness_y) << "\n";
    }

    SummaryLine line;
    line.add("experiment", "validate").add("scenario", s.name).add("pass", rep.all_pass);
    line.add("t0", t0).add("t1", t1);
    for (const auto& item : rep.items) line.add(item.condition, item.pass);
    const auto* fail = rep.first_failure();
    line.add("first_failure", fail ? fail->condition : std::string("none"));
    if (fail) {
        line.add("margin", fail->margin)
            .add("witness_t", fail->witness_t)
            .add("witness_x", fail->witness_x)
            .add("witness_y", fail->witness_y);
    }
    emit_summary(out_dir, line);
    return rep.all_pass ? 0 : 1;
}

} // namespace

Scenario parse_scenario(const std::string& path) {
    IniFile file = read_ini(path);

    Scenario s;
    s.source_path = path;
    {
        SectionReader r(file, "scenario", true);
        s.name = r.get_string("name", std::filesystem::path(path).stem().string());
        if (r.has("seed")) {
            s.has_seed = true;
            s.seed = r.get_uint("seed");
        }
        s.p = r.get_double("p", 2.0);
        s.delta = r.get_double("delta", 1.0);
        s.h = r.get_double("h", 0.0);
        r.finish();
    }

    s.grid = parse_grid(file);
    s.kernel = parse_kernel(file, s.grid, path);
    s.coeff = parse_coefficients(file);
    s.fire = parse_firing(file, s.p);
    s.stim = parse_stimulus_section(file, "stimulus", true);
    s.has_perturbation = file.sections.count("perturbation") > 0;
    s.perturbation = parse_stimulus_section(file, "perturbation", false);

    {
        SectionReader r(file, "integrator", false);
        if (r.present()) {
            s.scheme = scheme_from_string(r.get_string("scheme", "exponential_euler"));
            s.dt = r.get_double("dt", 0.01);
            r.finish();
        }
    }

    s.experiment = parse_experiment(file, s.delta);

    // Anything left is a section no parser asked for.
    static const char* known[] = {"scenario",  "grid",       "kernel",     "coefficients",
                                  "firing_rate", "stimulus", "perturbation", "integrator",
                                  "experiment"};
    for (const auto& [name, sec] : file.sections) {
        bool ok = false;
        for (const char* k : known) ok = ok || name == k;
        if (!ok)
            throw config_error(at_line(path, sec.line) + ": unknown section [" + name + "]");
    }

    // Structural validation: the model must assemble.
    scenario_model(s);
    if (!(s.dt > 0.0)) throw config_error(path + ": [integrator] dt must be positive");

    if ((s.experiment.type == "continuity" || s.experiment.type == "upper_semicontinuity") &&
        !s.has_perturbation)
        throw config_error(path + ": experiment '" + s.experiment.type +
                           "' needs a [perturbation] section");

    if (experiment_needs_gate(s.experiment.type)) {
        if (!(s.delta > 0.0))
            throw config_error(path + ": [scenario] delta must be positive for attractor "
                                      "experiments");
        const double k1b0 = s.fire.k1 * s.coeff.b_zero;
        if (!(k1b0 < s.coeff.a_minus))
            throw config_error("k1*b0 >= a_minus: attractor experiments disabled (k1*b0 = " +
                               format_double(k1b0) + ", a_minus = " +
                               format_double(s.coeff.a_minus) + ")");
    }

    return s;
}

ModelSpec scenario_model(const Scenario& s) {
    return make_model(s.grid, s.kernel, s.coeff, s.fire, s.stim, s.h, s.p);
}

ProcessHandle scenario_process(const Scenario& s) {
    return make_process(scenario_model(s), s.scheme, s.dt);
}

std::pair<double, double> scenario_time_window(const Scenario& s) {
    const auto& e = s.experiment;
    if (e.type == "evolve" || e.type == "envelope") return {e.tau, e.t_end};
    if (e.type == "section")
        return {e.t - *std::max_element(e.horizons.begin(), e.horizons.end()), e.t};
    if (e.type == "continuity") return {e.tau, e.tau + e.L};
    if (e.type == "upper_semicontinuity") return {e.t - e.horizon, e.t};
    if (e.type == "validate") return {e.t0, e.t1};
    return {0.0, 1.0};
}

int run_experiment(const Scenario& s, const RunOptions& opt) {
    if (opt.out_dir.empty()) throw config_error("run needs an output directory");
    if (experiment_randomized(s.experiment) && !s.has_seed)
        throw config_error(s.source_path + ": experiment '" + s.experiment.type +
                           "' draws random samples, so a seed is required ([scenario] seed or "
                           "--seed)");
    std::filesystem::create_directories(opt.out_dir);

    // Coefficient certificates are preconditions of every estimate; sample
    // them over the experiment's window before any stepping. The validate
    // experiment reports on them instead of aborting.
    if (s.experiment.type != "validate") {
        const auto window = scenario_time_window(s);
        s.coeff.validate(window.first, window.second);
    }

    const auto& type = s.experiment.type;
    if (type == "evolve") return run_evolve(s, opt);
    if (type == "envelope") return run_envelope(s, opt);
    if (type == "section") return run_section(s, opt);
    if (type == "continuity") return run_continuity(s, opt);
    if (type == "upper_semicontinuity") return run_upper_semicontinuity(s, opt);
    if (type == "kernel_bounds") return run_kernel_bounds(s, opt);
    if (type == "validate") return validate_impl(s, s.experiment.t0, s.experiment.t1, opt.out_dir);
    throw config_error("unknown experiment type '" + type + "'");
}

int run_validate(const Scenario& s, const std::string& out_dir) {
    const auto window = scenario_time_window(s);
    return validate_impl(s, window.first, window.second, out_dir);
}

int run_norms(const Scenario& s, const std::string& out_dir) {
    const auto& k = s.kernel;
    const double q = conjugate_exponent(s.p);
    const double inf = std::numeric_limits<double>::infinity();
    const double n1 = k.norm(1.0);
    const double np = k.norm(s.p);
    const double nq = k.norm(q);
    const double nsup = k.norm(inf);

    const auto sums = k.row_sums();
    double sum_min = std::numeric_limits<double>::infinity();
    double sum_max = -std::numeric_limits<double>::infinity();
    double max_deficit = 0.0;
    for (double v : sums) {
        sum_min = std::min(sum_min, v);
        sum_max = std::max(sum_max, v);
        max_deficit = std::max(max_deficit, std::abs(1.0 - v));
    }

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        {
            auto out =
                open_output((std::filesystem::path(out_dir) / "kernel_norms.csv").string());
            out << "p,l1,lp,lq,sup\n";
            out << format_double(s.p) << ',' << format_double(n1) << ',' << format_double(np)
                << ',' << format_double(nq) << ',' << format_double(nsup) << "\n";
        }
        {
            auto out = open_output((std::filesystem::path(out_dir) / "row_sums.csv").string());
            out << "node_index,row_sum\n";
            for (std::size_t i = 0; i < sums.size(); ++i)
                out << i << ',' << format_double(sums[i]) << "\n";
        }
    }

    SummaryLine line;
    line.add("verb", "norms")
        .add("scenario", s.name)
        .add("kernel", k.name())
        .add("translation_invariant", k.translation_invariant())
        .add("p", s.p)
        .add("l1", n1)
        .add("lp", np)
        .add("lq", nq)
        .add("sup", nsup)
        .add("row_sum_min", sum_min)
        .add("row_sum_max", sum_max)
        .add("max_mass_deficit", max_deficit);
    emit_summary(out_dir, line);
    return 0;
}

} // namespace nfl
