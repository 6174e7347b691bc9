#pragma once

// Mode dispatch: turns an ExperimentConfig into a RunRecord.

#include <algorithm>
#include <chrono>
#include <string>

#include "plob/control.hpp"
#include "plob/errors.hpp"
#include "plob/harness/config.hpp"
#include "plob/harness/emit.hpp"
#include "plob/harness/presets.hpp"
#include "plob/harness/verify.hpp"
#include "plob/obstacle.hpp"
#include "plob/penalty.hpp"
#include "plob/plap.hpp"
#include "plob/random.hpp"

namespace plob::harness {

enum ExitCode : int {
    kOk = 0,
    kConfigFailure = 1,
    kSolverFailure = 2,
    kPreconditionFailure = 3,
    kOutputFailure = 4,
    kCheckFailure = 5,  ///< the run finished but a verification clause failed
};

namespace detail {

inline void common_metrics(RunRecord& rec, const ExperimentConfig& c, double epsilon) {
    rec.metric("mode", std::string(to_string(c.mode)));
    rec.metric("seed", std::to_string(c.seed));
    rec.metric("dim", static_cast<long>(c.dim));
    rec.metric("n", static_cast<long>(c.n));
    rec.metric("p", c.p);
    rec.metric("epsilon", epsilon);
}

inline void run_solve(const ExperimentConfig& c, const GridPtr& grid, Rng& rng, RunRecord& rec) {
    Field f = materialize_preset(*c.f, grid, &rng);
    Field psi = materialize_preset(*c.psi, grid, &rng, true);
    ProblemSpec spec = make_problem(grid, c.p, f, psi, c.epsilon);
    spec.tol_pg = c.tol_pg;
    spec.max_iters = c.max_iters;

    const ObstacleSolution sol = solve_obstacle(spec);
    common_metrics(rec, c, spec.epsilon);
    rec.metric("energy", sol.energy_value);
    rec.metric("iterations", sol.iterations);
    rec.metric("pg_norm", sol.pg_norm);
    rec.metric("active_count", static_cast<long>(sol.active_set.size()));
    rec.metric("complementarity_gap", complementarity_gap(spec, sol));
    rec.metric("complementarity_bound", complementarity_bound(sol, spec.psi));
    rec.metric("min_multiplier", sol.mu.values().minCoeff());
    rec.metric("multiplier_violations", static_cast<long>(sol.multiplier_violations.size()));
    rec.fields = {{"f", f}, {"psi", psi}, {"u", sol.u}, {"mu", sol.mu}};
}

inline void run_penalize(const ExperimentConfig& c, const GridPtr& grid, Rng& rng, RunRecord& rec) {
    Field f = materialize_preset(*c.f, grid, &rng);
    Field psi = materialize_preset(*c.psi, grid, &rng, true);
    ProblemSpec spec = make_problem(grid, c.p, f, psi, c.epsilon);
    spec.tol_pg = c.tol_pg;
    spec.max_iters = c.max_iters;
    const std::vector<double> deltas = c.deltas.empty() ? geometric_schedule() : c.deltas;

    const PenaltyPath path = continuation(spec, deltas);
    Table t{{"delta", "error_w1p", "penalty_mass", "complementarity"}, {}};
    for (std::size_t i = 0; i < path.deltas.size(); ++i)
        t.rows.push_back({format_real(path.deltas[i]), format_real(path.errors[i]),
                          format_real(path.penalty_masses[i]), format_real(path.complementarity[i])});
    rec.tables.emplace_back("path", std::move(t));

    rec.fields = {{"f", f}, {"psi", psi}, {"u", path.direct.u}, {"mu", path.direct.mu}};
    for (std::size_t i = 0; i < path.solutions.size(); ++i) {
        rec.fields.emplace_back("udelta_" + std::to_string(i), path.solutions[i]);
        rec.fields.emplace_back("mudelta_" + std::to_string(i), path.penalty_multipliers[i]);
    }

    common_metrics(rec, c, spec.epsilon);
    rec.metric("direct_energy", path.direct.energy_value);
    rec.metric("steps", static_cast<long>(path.deltas.size()));
    const bool any = !path.deltas.empty();
    rec.metric("final_delta", any ? path.deltas.back() : 0.0);
    rec.metric("final_error_w1p", any ? path.errors.back() : 0.0);
    rec.metric("final_penalty_mass", any ? path.penalty_masses.back() : 0.0);
    rec.metric("final_complementarity", any ? path.complementarity.back() : 0.0);
    rec.metric("final_violation", any ? path.violations.back() : 0.0);
    rec.metric("errors_nonincreasing", static_cast<long>(nonincreasing_with_slack(path.errors, 0.1, 1e-10)));
    if (path.failure) rec.failure = json{{"error", "solver_failure"}, {"message", *path.failure}};
}

inline void run_control(const ExperimentConfig& c, const GridPtr& grid, Rng& rng, RunRecord& rec) {
    Field f = materialize_preset(*c.f, grid, &rng);
    Field z = materialize_preset(*c.z, grid, &rng);
    ControlProblem cp = make_control_problem(grid, c.p, f, z, c.epsilon);
    cp.tol_pg = c.tol_pg;
    cp.max_iters = c.max_iters;
    cp.options.outer_tol = c.outer_tol;
    cp.options.max_outer_iters = c.max_outer_iters;
    cp.options.fd_step = c.fd_step;
    cp.options.probes = c.probes;
    cp.options.threads = c.threads;
    cp.options.probe_seed = rng.next_u64();
    if (c.initial_control) cp.options.initial_control = materialize_preset(*c.initial_control, grid, &rng, true);

    const ControlResult res = solve_control(cp);
    const CertificateReport cert = optimal_pair_certificate(cp, res);

    Table t{{"clause", "status", "value", "bound"}, {}};
    for (const auto& cl : cert.clauses)
        t.rows.push_back({cl.name, to_string(cl.status), format_real(cl.value), format_real(cl.bound)});
    rec.tables.emplace_back("certificate", std::move(t));

    static constexpr const char* sign_names[] = {"zero", "nonpositive", "nonnegative", "mixed"};
    common_metrics(rec, c, cp.epsilon);
    rec.metric("source_sign", std::string(sign_names[static_cast<int>(cp.sign())]));
    rec.metric("certificate", std::string(to_string(res.certificate)));
    rec.metric("J", res.J_value);
    rec.metric("fixed_point_gap", res.fixed_point_gap);
    rec.metric("outer_iterations", res.outer_iterations);
    rec.metric("inner_solves", res.inner_solves);
    rec.metric("gradient_norm", res.gradient_norm);
    rec.metric("probes_checked", static_cast<long>(res.probes_checked));
    rec.metric("probes_violated", static_cast<long>(res.probes_violated));
    rec.metric("worst_probe_margin", res.worst_probe_margin);
    rec.metric("certificate_passed", static_cast<long>(cert.all_passed()));

    rec.fields = {{"f", f}, {"z", z}, {"psi_star", res.psi_star}, {"u_star", res.u_star}};
    if (res.certificate == Certificate::zero_control_branch) rec.fields.emplace_back("gf", green_of(cp));
}

inline void run_verify(const ExperimentConfig& c, const GridPtr& grid, RunRecord& rec) {
    const auto suites = run_property_suites(grid, c.p, c.seed, c.instances);
    Table t{{"suite", "instances", "passed", "failed", "worst", "tolerance", "statistic"}, {}};
    long passed = 0, failed = 0;
    for (const auto& s : suites) {
        t.rows.push_back({s.name, std::to_string(s.instances), std::to_string(s.passed), std::to_string(s.failed),
                          format_real(s.worst), format_real(s.tolerance), s.statistic});
        passed += s.passed;
        failed += s.failed;
    }
    rec.tables.emplace_back("summary", std::move(t));
    common_metrics(rec, c, c.epsilon.value_or(1e-8));
    rec.metric("suites", static_cast<long>(suites.size()));
    rec.metric("instances_per_suite", static_cast<long>(c.instances));
    rec.metric("passed", passed);
    rec.metric("failed", failed);
    if (failed > 0)
        rec.failure = json{{"error", "verification_failed"}, {"failed", failed}};
}

}  // namespace detail

/// Executes the configured mode. Solver failures are captured into the record
/// rather than thrown; configuration problems still throw ConfigError.
inline RunRecord run(const ExperimentConfig& c) {
    validate(c);
    RunRecord rec;
    rec.mode = c.mode;
    rec.seed = c.seed;
    rec.config = c.to_json();
    const auto t0 = std::chrono::steady_clock::now();

    const GridPtr grid = build_grid(c.dim, c.n, c.extents);
    Rng rng(c.seed);
    try {
        switch (c.mode) {
            case Mode::solve: detail::run_solve(c, grid, rng, rec); break;
            case Mode::penalize: detail::run_penalize(c, grid, rng, rec); break;
            case Mode::control: detail::run_control(c, grid, rng, rec); break;
            case Mode::verify: detail::run_verify(c, grid, rec); break;
        }
    } catch (const SolverFailure& e) {
        rec.failure = json{{"error", "solver_failure"}, {"message", e.what()}, {"iterations", e.iterations()},
                           {"pg_norm", e.pg_norm()}, {"energy", e.energy()}};
        if (!e.last_iterate().empty()) {
            Field last(grid);
            if (last.size() == e.last_iterate().size())
                for (Index k = 0; k < last.size(); ++k) last[k] = e.last_iterate()[k];
            rec.fields.emplace_back("last_iterate", last);
        }
    } catch (const PreconditionError& e) {
        rec.failure = json{{"error", "precondition_failure"}, {"message", e.what()}, {"nodes", e.nodes()}};
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

inline int exit_code(const RunRecord& rec) {
    if (!rec.failure) return kOk;
    const std::string kind = rec.failure->value("error", "");
    if (kind == "solver_failure") return kSolverFailure;
    if (kind == "precondition_failure") return kPreconditionFailure;
    return kCheckFailure;
}

}  // namespace plob::harness
