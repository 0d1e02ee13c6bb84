#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "nfl/attractor.hpp"
#include "nfl/csv.hpp"
#include "nfl/rng.hpp"
#include "nfl/util.hpp"

namespace nfl {

DissipationBudget make_budget(const ModelSpec& m, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw config_error("delta must be positive and finite");
    DissipationBudget b;
    b.a_minus = m.coeff.a_minus;
    b.a_zero = m.coeff.a_zero;
    b.b_zero = m.coeff.b_zero;
    b.k1 = m.fire.k1;
    b.k2 = m.fire.k2;
    b.p = m.p;
    b.volume = m.grid->volume();
    const GridPtr grid = m.grid;
    const Stimulus stim = m.stim;
    const double p = m.p;
    b.stim_norm = [grid, stim, p](double t) { return stim.instantaneous_norm(grid, t, p); };
    b.stim_norm_sup = m.stim.certified_norm(m.grid, p);
    b.delta = delta;
    b.time_constant = m.fire.k2.is_constant() && m.stim.norm_time_constant;
    return b;
}

double absorbing_radius(const DissipationBudget& budget, double t) {
    const double eps = budget.epsilon();
    if (!(eps > 0.0))
        throw config_error("dissipativity gate failed: k1*b0 >= a_minus");
    return (1.0 + budget.delta) / eps *
           (budget.b_zero * budget.k2(t) * std::pow(budget.volume, 1.0 / budget.p) +
            budget.stim_norm(t));
}

EnvelopeReport decay_envelope_check(const ProcessHandle& h, const DissipationBudget& budget,
                                    double tau, double t_end, const Field& u_tau) {
    const double eps = budget.epsilon();
    if (!(eps > 0.0))
        throw config_error("dissipativity gate failed: k1*b0 >= a_minus");
    const double p = budget.p;
    const double rate = budget.delta * p / (1.0 + budget.delta) * eps;
    const double slack = 1.01;
    const double reentry_tol = 1.0 + 1e-6;

    EnvelopeReport report;
    report.min_margin = std::numeric_limits<double>::infinity();
    const double radius_fixed = budget.time_constant ? absorbing_radius(budget, tau) : 0.0;
    double norm_tau_p = 0.0;

    evolve_observe(h, tau, t_end, u_tau,
                   [&](std::int64_t step, double t, const Field&, double norm) {
                       if (step == 0) norm_tau_p = std::pow(norm, p);
                       const double radius =
                           budget.time_constant ? radius_fixed : absorbing_radius(budget, t);
                       const double envelope_p = std::exp(-rate * (t - tau)) * norm_tau_p;
                       const double norm_p = std::pow(norm, p);
                       EnvelopeReport::Row row;
                       row.t = t;
                       row.norm = norm;
                       row.envelope = std::pow(envelope_p, 1.0 / p);
                       row.radius = radius;
                       row.outside = norm >= radius;
                       report.rows.push_back(row);

                       if (!report.entered && !row.outside) {
                           report.entered = true;
                           report.entry_time = t;
                       }
                       if (!report.entered) {
                           // Envelope applies while the trajectory has stayed
                           // outside the ball since tau.
                           const double margin =
                               (slack * envelope_p - norm_p) / std::max(envelope_p, 1e-300);
                           if (margin < report.min_margin) {
                               report.min_margin = margin;
                               report.witness_time = t;
                           }
                           if (margin < 0.0) report.pass = false;
                       } else if (!report.re_exited && norm >= radius * reentry_tol) {
                           report.re_exited = true;
                           report.re_exit_time = t;
                       }
                   });
    if (budget.time_constant && report.re_exited) report.pass = false;
    if (!std::isfinite(report.min_margin)) report.min_margin = 0.0;
    return report;
}

double hausdorff_semidist(const std::vector<Field>& a, const std::vector<Field>& b, double p) {
    if (a.empty() || b.empty()) throw config_error("semidistance of an empty set");
    double worst = 0.0;
    for (const Field& u : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const Field& v : b) best = std::min(best, lp_distance(u, v, p));
        worst = std::max(worst, best);
    }
    return worst;
}

namespace {

constexpr double dedup_tol = 1e-8;

std::vector<Field> dedup_members(std::vector<Field> members, double p) {
    std::vector<Field> kept;
    for (Field& m : members) {
        bool fresh = true;
        for (const Field& k : kept) {
            if (lp_distance(m, k, p) <= dedup_tol) {
                fresh = false;
                break;
            }
        }
        if (fresh) kept.push_back(std::move(m));
    }
    return kept;
}

} // namespace

AttractorSection sample_attractor_section(const ProcessHandle& h,
                                          const DissipationBudget& budget, double t,
                                          const std::vector<double>& horizons,
                                          int ensemble_size, std::uint64_t seed) {
    if (horizons.empty()) throw config_error("need at least one horizon");
    for (std::size_t j = 0; j < horizons.size(); ++j) {
        if (horizons[j] < 0.0) throw config_error("horizons must be >= 0");
        if (j > 0 && horizons[j] <= horizons[j - 1])
            throw config_error("horizons must be strictly increasing");
    }
    if (ensemble_size < 1) throw config_error("ensemble size must be >= 1");

    const double p = budget.p;
    const double h_max = horizons.back();
    const double draw_radius = 2.0 * absorbing_radius(budget, t - h_max);

    const std::int64_t n = h.model.grid->node_count();
    std::vector<Field> initial;
    initial.reserve(static_cast<std::size_t>(ensemble_size));
    for (int k = 0; k < ensemble_size; ++k) {
        Rng rng(seed, static_cast<std::uint64_t>(k) + 1);
        std::vector<double> vals(static_cast<std::size_t>(n));
        for (auto& v : vals) v = rng.uniform(-1.0, 1.0);
        Field w(h.model.grid, std::move(vals));
        const double c = lp_norm(w, p);
        const double target = draw_radius * rng.uniform();
        const double scale = c > 0.0 ? target / c : 0.0;
        for (std::int64_t i = 0; i < n; ++i) w[i] *= scale;
        initial.push_back(std::move(w));
    }

    std::vector<std::vector<Field>> sections;
    sections.reserve(horizons.size());
    for (double horizon : horizons) {
        const double tau = t - horizon;
        std::vector<Field> finals(initial.begin(), initial.end());
        parallel_for_index(ensemble_size, [&](std::int64_t k) {
            finals[static_cast<std::size_t>(k)] =
                evolve_final(h, tau, t, initial[static_cast<std::size_t>(k)]);
        });
        sections.push_back(dedup_members(std::move(finals), p));
    }

    AttractorSection section;
    section.t = t;
    section.horizon = h_max;
    section.horizons = horizons;
    section.seed = seed;
    section.ensemble_size = ensemble_size;
    section.draw_radius = draw_radius;
    for (std::size_t j = 0; j + 1 < sections.size(); ++j) {
        const double gap = hausdorff_semidist(sections[j], sections[j + 1], p);
        if (!section.gaps.empty() && gap > section.gaps.back())
            section.gaps_nonincreasing = false;
        section.gaps.push_back(gap);
    }
    section.last_gap = section.gaps.empty() ? 0.0 : section.gaps.back();
    section.converged = section.last_gap <= 1e-3;
    section.members = std::move(sections.back());
    for (const Field& m : section.members)
        section.max_member_norm = std::max(section.max_member_norm, lp_norm(m, p));
    section.radius_at_t = absorbing_radius(budget, t);
    section.contained = section.max_member_norm <= section.radius_at_t * (1.0 + 1e-6);
    return section;
}

ContinuityReport continuity_gap(const ProcessHandle& h, const Stimulus& S, const Stimulus& S0,
                                double tau, double L, const Field& u_tau) {
    if (!(L >= tau)) throw config_error("continuity window needs L >= tau");
    ProcessHandle hS = h;
    hS.model.stim = S;
    ProcessHandle hS0 = h;
    hS0.model.stim = S0;

    const Trajectory trajS = evolve(hS, tau, L, u_tau);
    const Trajectory trajS0 = evolve(hS0, tau, L, u_tau);
    if (trajS.times.size() != trajS0.times.size())
        throw check_failure("trajectories under S and S0 produced different stamp counts");

    const ModelSpec& m = h.model;
    const double p = m.p;
    double rho = 0.0;
    for (double v : trajS.norms) rho = std::max(rho, v);
    for (double v : trajS0.norms) rho = std::max(rho, v);
    rho *= 1.1;

    double stimulus_gap = 0.0;
    for (double t : trajS.times) {
        const Field dS = S.sample(m.grid, t);
        const Field dS0 = S0.sample(m.grid, t);
        stimulus_gap = std::max(stimulus_gap, lp_distance(dS, dS0, p));
    }

    const double q = conjugate_exponent(p);
    const double bracket = pow_or_one(m.grid->volume(), 1.0 / q) + 2.0 * pow_or_one(rho, p / q);
    const double growth_scale = m.coeff.b_zero * m.kernel.norm(p) * bracket;
    const bool c2_const = m.fire.C2.is_constant();
    const double c2_value = c2_const ? m.fire.C2(0.0) : 0.0;

    ContinuityReport report;
    report.min_margin = std::numeric_limits<double>::infinity();
    report.rho = rho;
    report.stimulus_gap = stimulus_gap;
    double c2_integral = 0.0;
    for (std::size_t s = 0; s < trajS.times.size(); ++s) {
        const double t = trajS.times[s];
        if (s > 0) {
            c2_integral += c2_const
                               ? c2_value * (t - trajS.times[s - 1])
                               : integrate_expr(m.fire.C2, trajS.times[s - 1], t);
        }
        const double majorant = std::exp((m.coeff.a_zero - m.coeff.a_minus) * t) /
                                m.coeff.a_zero * std::exp(growth_scale * c2_integral) *
                                stimulus_gap;
        const double gap = lp_distance(trajS.fields[s], trajS0.fields[s], p);
        ContinuityReport::Row row;
        row.t = t;
        row.gap = gap;
        row.majorant = majorant;
        row.ratio = stimulus_gap > 0.0 ? gap / stimulus_gap : 0.0;
        report.rows.push_back(row);
        const double margin = (majorant - gap) / std::max(majorant, 1e-300);
        if (margin < report.min_margin) {
            report.min_margin = margin;
            report.witness_time = t;
        }
        if (gap > majorant) report.pass = false;
    }
    if (!std::isfinite(report.min_margin)) report.min_margin = 0.0;
    report.final_ratio = report.rows.empty() ? 0.0 : report.rows.back().ratio;
    return report;
}

SemicontinuityReport upper_semicontinuity_curve(const ProcessHandle& h,
                                                const Stimulus& perturbation, double t,
                                                const std::vector<double>& levels, double delta,
                                                double horizon, int ensemble_size,
                                                std::uint64_t seed) {
    if (levels.empty()) throw config_error("need at least one perturbation level");
    const double p = h.model.p;
    const DissipationBudget budget0 = make_budget(h.model, delta);
    const AttractorSection base =
        sample_attractor_section(h, budget0, t, {horizon}, ensemble_size, seed);

    SemicontinuityReport report;
    for (double level : levels) {
        ProcessHandle hc = h;
        hc.model.stim = stimulus_sum(h.model.stim, perturbation, level);
        const DissipationBudget budget_c = make_budget(hc.model, delta);
        const AttractorSection sec =
            sample_attractor_section(hc, budget_c, t, {horizon}, ensemble_size, seed);
        SemicontinuityReport::Row row;
        row.level = level;
        row.distance = hausdorff_semidist(sec.members, base.members, p);
        report.rows.push_back(row);
    }
    for (std::size_t j = 0; j + 1 < report.rows.size(); ++j) {
        if (report.rows[j + 1].distance > report.rows[j].distance * 1.1) {
            report.monotone = false;
            report.witness_level = report.rows[j + 1].level;
        }
    }
    if (report.rows.size() > 1 &&
        report.rows.back().distance > report.rows.front().distance / 4.0)
        report.contracted = false;
    report.pass = report.monotone && report.contracted;
    return report;
}

} // namespace nfl
