#pragma once

// Optimal control of the obstacle: minimize
//     J(psi) = (1/p) ( ||T_f(psi) - z||_p^p + int |grad psi|^p )
// over zero-trace controls psi, where T_f is the obstacle map.
//
// For f <= 0 the optimum is a fixed point of T_f, so the search runs over
// lifted controls T_f(psi) with forward-difference gradients of the reduced
// cost. For f >= 0 and z <= Gf the optimal pair is (0, Gf) in closed form.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "plob/errors.hpp"
#include "plob/mesh.hpp"
#include "plob/obstacle.hpp"
#include "plob/plap.hpp"
#include "plob/random.hpp"

namespace plob {

enum class SourceSign { zero, nonpositive, nonnegative, mixed };

inline SourceSign classify_source(const Field& f) {
    bool neg = false, pos = false;
    for (Index k = 0; k < f.size(); ++k) {
        neg = neg || f[k] < 0.0;
        pos = pos || f[k] > 0.0;
    }
    if (neg && pos) return SourceSign::mixed;
    if (neg) return SourceSign::nonpositive;
    if (pos) return SourceSign::nonnegative;
    return SourceSign::zero;
}

inline bool is_nonpositive(SourceSign s) { return s == SourceSign::zero || s == SourceSign::nonpositive; }
inline bool is_nonnegative(SourceSign s) { return s == SourceSign::zero || s == SourceSign::nonnegative; }

struct ControlOptions {
    double fd_step = 1e-6;       ///< forward-difference step, relative to the field scale
    long max_outer_iters = 2000;
    double outer_tol = 1e-9;     ///< weighted norm of the reduced-cost gradient
    int probes = 50;             ///< random controls the optimum is checked against
    double probe_amplitude = 1.0;
    std::uint64_t probe_seed = 0x9e3779b97f4a7c15ULL;
    unsigned threads = 1;        ///< workers for the finite-difference gradient; 0 = hardware
    std::optional<Field> initial_control;
};

struct ControlProblem {
    GridPtr grid;
    double p = 2.0;
    double epsilon = 1e-8;
    Field f;
    Field z;  ///< target profile
    double tol_pg = 1e-11;
    long max_iters = 400000;
    ControlOptions options;

    void validate() const {
        if (!grid) throw ConfigError("control problem has no grid");
        require_exponent(p);
        require_on_grid(*grid, f);
        require_on_grid(*grid, z);
        if (!f.is_finite() || !z.is_finite()) throw ConfigError("f and z must be finite");
    }

    SourceSign sign() const { return classify_source(f); }

    ProblemSpec obstacle_spec(const Field& psi) const {
        ProblemSpec s;
        s.grid = grid;
        s.p = p;
        s.epsilon = epsilon;
        s.f = f;
        s.psi = psi;
        s.tol_pg = tol_pg;
        s.max_iters = max_iters;
        return s;
    }
};

inline ControlProblem make_control_problem(GridPtr grid, double p, Field f, Field z,
                                           std::optional<double> epsilon = std::nullopt) {
    ControlProblem cp;
    cp.grid = std::move(grid);
    cp.p = p;
    cp.epsilon = epsilon ? *epsilon : default_epsilon(f, z);
    cp.f = std::move(f);
    cp.z = std::move(z);
    cp.validate();
    return cp;
}

struct CostEvaluation {
    double J = 0.0;
    ObstacleSolution state;  ///< the inner solve T_f(psi), kept for reuse
};

/// (1/p) ( sum_i w_i |state_i - z_i|^p + seminorm_p(psi) ), given the state.
inline double tracking_cost(const ControlProblem& cp, const Field& psi, const Field& state) {
    return (lp_power(*cp.grid, state - cp.z, cp.p) + seminorm_p(*cp.grid, psi, cp.p)) / cp.p;
}

inline CostEvaluation cost_J(const ControlProblem& cp, const Field& psi,
                             const std::optional<Field>& warm = std::nullopt) {
    require_on_grid(*cp.grid, psi);
    if (!psi.has_zero_trace()) throw ContractViolation("control must vanish on the boundary");
    CostEvaluation out;
    out.state = solve_obstacle(cp.obstacle_spec(psi), warm);
    out.J = tracking_cost(cp, psi, out.state.u);
    return out;
}

/// psi -> T_f(psi). Lifting cannot increase the cost when f <= 0.
inline Field lift_control(const ControlProblem& cp, const Field& psi,
                          const std::optional<Field>& warm = std::nullopt) {
    if (!is_nonpositive(cp.sign())) throw ContractViolation("lift_control requires f <= 0");
    return solve_obstacle(cp.obstacle_spec(psi), warm).u;
}

enum class Certificate { fixed_point_branch, zero_control_branch, numeric_only };

inline const char* to_string(Certificate c) {
    switch (c) {
        case Certificate::fixed_point_branch: return "fixed-point-branch";
        case Certificate::zero_control_branch: return "zero-control-branch";
        case Certificate::numeric_only: return "numeric-only";
    }
    return "?";
}

struct ControlResult {
    Field psi_star;
    Field u_star;
    double J_value = 0.0;
    double fixed_point_gap = 0.0;  ///< ||psi* - T_f(psi*)||_inf
    Certificate certificate = Certificate::numeric_only;
    long outer_iterations = 0;
    long inner_solves = 0;
    double gradient_norm = 0.0;  ///< weighted norm of the last reduced-cost gradient
    bool converged = false;
    int probes_checked = 0;
    int probes_violated = 0;  ///< probes with J(probe) < J* - 1e-6
    double worst_probe_margin = 0.0;  ///< min over probes of J(probe) - J*
    std::string diagnostics;
};

namespace detail {

inline double field_scale(const ControlProblem& cp, const Field& psi) {
    return std::max({1.0, psi.max_abs(), cp.z.max_abs()});
}

/// Evaluates the reduced cost at a raw control. In lifted mode the control is
/// replaced by T_f(control) first, so the returned `control` is a fixed point.
struct ReducedPoint {
    Field control;
    Field state;
    double J = 0.0;
};

inline ReducedPoint reduced_eval(const ControlProblem& cp, const Field& raw, bool lifted,
                                 const std::optional<Field>& warm, long& solves) {
    ReducedPoint out;
    if (lifted) {
        out.control = solve_obstacle(cp.obstacle_spec(raw), warm).u;
        ++solves;
    } else {
        out.control = raw;
    }
    auto eval = cost_J(cp, out.control, lifted ? std::optional<Field>(out.control) : warm);
    ++solves;
    out.state = std::move(eval.state.u);
    out.J = eval.J;
    return out;
}

/// Forward-difference gradient of the reduced cost over interior nodes. Components
/// are independent inner solves, merged by index so the result does not depend on
/// the worker count.
inline Eigen::VectorXd reduced_gradient(const ControlProblem& cp, const ReducedPoint& at, bool lifted,
                                        double step, long& solves) {
    const Grid& grid = *cp.grid;
    const auto& interior = grid.interior();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.num_nodes()));
    std::vector<long> counts(interior.size(), 0);

    auto component = [&](std::size_t idx) {
        const Index k = interior[idx];
        Field bumped = at.control;
        bumped[k] += step;
        long local = 0;
        const auto r = reduced_eval(cp, bumped, lifted, at.state, local);
        g[static_cast<Eigen::Index>(k)] = (r.J - at.J) / step;
        counts[idx] = local;
    };

    unsigned workers = cp.options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                               : cp.options.threads;
    workers = std::min<unsigned>(workers, static_cast<unsigned>(interior.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < interior.size(); ++i) component(i);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < interior.size(); i += workers) component(i);
            });
    }
    for (long c : counts) solves += c;
    return g;
}

inline void check_probes(const ControlProblem& cp, ControlResult& res) {
    Rng rng(cp.options.probe_seed);
    res.probes_checked = 0;
    res.probes_violated = 0;
    res.worst_probe_margin = std::numeric_limits<double>::infinity();
    const double amp = cp.options.probe_amplitude * std::max(1.0, cp.z.max_abs());
    for (int i = 0; i < cp.options.probes; ++i) {
        const Field probe = random_field(cp.grid, rng, amp);
        const double Jp = cost_J(cp, probe).J;
        ++res.inner_solves;
        ++res.probes_checked;
        const double margin = Jp - res.J_value;
        res.worst_probe_margin = std::min(res.worst_probe_margin, margin);
        if (margin < -1e-6) ++res.probes_violated;
    }
    if (res.probes_checked == 0) res.worst_probe_margin = 0.0;
}

inline ControlResult descend_reduced_cost(const ControlProblem& cp, bool lifted) {
    const Grid& grid = *cp.grid;
    const Eigen::VectorXd& w = grid.weights();
    const Eigen::VectorXd w_inv = w.cwiseInverse();
    const ControlOptions& opt = cp.options;
    ControlResult res;

    Field start = opt.initial_control ? *opt.initial_control : Field(cp.grid);
    require_on_grid(grid, start);
    start.zero_boundary();

    long solves = 0;
    ReducedPoint cur = reduced_eval(cp, start, lifted, std::nullopt, solves);
    double step = opt.fd_step * field_scale(cp, cur.control);
    Eigen::VectorXd g = reduced_gradient(cp, cur, lifted, step, solves);

    auto weighted_norm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.cwiseProduct(v).dot(w_inv)); };
    double alpha = 1.0;
    {
        const double gmax = g.cwiseProduct(w_inv).cwiseAbs().maxCoeff();
        if (gmax > 0.0) alpha = 0.1 * field_scale(cp, cur.control) / gmax;
    }

    std::string stop = "iteration cap";
    long it = 0;
    for (; it < opt.max_outer_iters; ++it) {
        res.gradient_norm = weighted_norm(g);
        if (res.gradient_norm <= opt.outer_tol) {
            res.converged = true;
            stop = "gradient below tolerance";
            break;
        }
        const Eigen::VectorXd dir = -g.cwiseProduct(w_inv);
        const double slope = g.dot(dir);

        bool accepted = false;
        ReducedPoint trial;
        double lambda = 1.0;
        for (int bt = 0; bt < 50; ++bt) {
            Field raw(cp.grid, cur.control.values() + lambda * alpha * dir);
            raw.zero_boundary();
            trial = reduced_eval(cp, raw, lifted, cur.state, solves);
            if (trial.J <= cur.J + 1e-4 * lambda * alpha * slope) {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted || !(trial.J < cur.J)) {
            // No decrease is resolvable at the finite-difference scale.
            res.converged = true;
            stop = "no further decrease at finite-difference resolution";
            break;
        }

        const double prev_J = cur.J;
        step = opt.fd_step * field_scale(cp, trial.control);
        Eigen::VectorXd g_new = reduced_gradient(cp, trial, lifted, step, solves);
        const Eigen::VectorXd s = trial.control.values() - cur.control.values();
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        alpha = sy > 0.0 ? std::clamp(s.cwiseProduct(s).dot(w) / sy, 1e-12, 1e12) : 10.0 * alpha;

        cur = std::move(trial);
        g = std::move(g_new);
        if (prev_J - cur.J <= 1e-15 * (1.0 + std::abs(cur.J))) {
            res.converged = true;
            stop = "relative decrease below 1e-15";
            ++it;
            break;
        }
    }

    res.psi_star = cur.control;
    res.u_star = cur.state;
    res.J_value = cur.J;
    res.fixed_point_gap = max_abs_diff(res.psi_star, res.u_star);
    res.outer_iterations = it;
    res.inner_solves = solves;
    std::ostringstream msg;
    msg << "stopped: " << stop << "; outer iterations " << it << ", gradient norm " << res.gradient_norm;
    res.diagnostics = msg.str();
    return res;
}

}  // namespace detail

/// Branch for f <= 0, where the optimal control is a fixed point of T_f.
inline ControlResult solve_control_nonpositive(const ControlProblem& cp) {
    cp.validate();
    if (!is_nonpositive(cp.sign())) throw ContractViolation("solve_control_nonpositive requires f <= 0");
    ControlResult res = detail::descend_reduced_cost(cp, /*lifted=*/true);
    detail::check_probes(cp, res);
    res.certificate = res.converged && res.fixed_point_gap <= 1e-4 ? Certificate::fixed_point_branch
                                                                   : Certificate::numeric_only;
    return res;
}

/// Mixed-sign sources: plain reduced-cost descent without lifting; never certified.
inline ControlResult solve_control_numeric(const ControlProblem& cp) {
    cp.validate();
    ControlResult res = detail::descend_reduced_cost(cp, /*lifted=*/false);
    detail::check_probes(cp, res);
    res.certificate = Certificate::numeric_only;
    return res;
}

inline Field green_of(const ControlProblem& cp) {
    return green_solve(cp.obstacle_spec(Field(cp.grid)));
}

/// Closed-form branch for f >= 0 with z <= Gf: the optimal pair is (0, Gf).
inline ControlResult solve_control_nonnegative(const ControlProblem& cp) {
    cp.validate();
    if (!is_nonnegative(cp.sign())) throw ContractViolation("solve_control_nonnegative requires f >= 0");
    const Field gf = green_of(cp);
    std::vector<Index> bad;
    for (Index k = 0; k < cp.grid->num_nodes(); ++k)
        if (cp.z[k] > gf[k] + 1e-10) bad.push_back(k);
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << "target profile exceeds Gf at " << bad.size() << " node(s), first at index " << bad.front();
        throw PreconditionError(msg.str(), std::move(bad));
    }

    ControlResult res;
    res.psi_star = Field(cp.grid);
    const auto eval = cost_J(cp, res.psi_star);
    res.u_star = eval.state.u;
    res.J_value = eval.J;
    res.inner_solves = 2;
    res.fixed_point_gap = max_abs_diff(res.psi_star, res.u_star);
    res.converged = true;
    detail::check_probes(cp, res);
    res.certificate = max_abs_diff(res.u_star, gf) <= 1e-6 ? Certificate::zero_control_branch
                                                           : Certificate::numeric_only;
    res.diagnostics = "closed form (0, Gf)";
    return res;
}

/// Dispatches on the sign of f and, for f >= 0, on whether z <= Gf holds.
inline ControlResult solve_control(const ControlProblem& cp) {
    const SourceSign s = cp.sign();
    if (is_nonnegative(s)) {
        try {
            return solve_control_nonnegative(cp);
        } catch (const PreconditionError&) {
            if (s != SourceSign::zero) return solve_control_numeric(cp);
        }
    }
    if (is_nonpositive(s)) return solve_control_nonpositive(cp);
    return solve_control_numeric(cp);
}

/// min_i (T_f(psi) - Gf)_i; nonnegative up to solver tolerance when f >= 0.
inline double verify_state_dominates_green(const ControlProblem& cp, const Field& psi) {
    if (!is_nonnegative(cp.sign())) throw ContractViolation("state dominance requires f >= 0");
    const Field state = solve_obstacle(cp.obstacle_spec(psi)).u;
    return (state - green_of(cp)).values().minCoeff();
}

enum class ClauseStatus { pass, fail, unverified };

inline const char* to_string(ClauseStatus s) {
    switch (s) {
        case ClauseStatus::pass: return "pass";
        case ClauseStatus::fail: return "fail";
        case ClauseStatus::unverified: return "unverified";
    }
    return "?";
}

struct CertificateClause {
    std::string name;
    ClauseStatus status = ClauseStatus::unverified;
    double value = 0.0;
    double bound = 0.0;
};

struct CertificateReport {
    Certificate certificate = Certificate::numeric_only;
    std::vector<CertificateClause> clauses;

    bool all_passed() const {
        return std::all_of(clauses.begin(), clauses.end(),
                           [](const auto& c) { return c.status == ClauseStatus::pass; });
    }
    const CertificateClause* find(const std::string& name) const {
        for (const auto& c : clauses)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// Checks the structure the theorems predict for the branch the result claims.
inline CertificateReport optimal_pair_certificate(const ControlProblem& cp, const ControlResult& r) {
    CertificateReport rep;
    rep.certificate = r.certificate;
    const Grid& grid = *cp.grid;
    auto clause = [&](std::string name, double value, double bound) {
        rep.clauses.push_back({std::move(name), value <= bound ? ClauseStatus::pass : ClauseStatus::fail,
                               value, bound});
    };

    if (r.certificate == Certificate::zero_control_branch) {
        clause("zero_control", r.psi_star.max_abs(), 1e-6);
        const Field gf = green_of(cp);
        clause("state_equals_green", max_abs_diff(r.u_star, gf), 1e-6);
        double excess = 0.0;
        for (Index k = 0; k < grid.num_nodes(); ++k) excess = std::max(excess, cp.z[k] - gf[k]);
        clause("target_below_green", excess, 1e-10);
        return rep;
    }

    const double s_ctrl = seminorm_p(grid, r.psi_star, cp.p);
    const double s_state = seminorm_p(grid, r.u_star, cp.p);
    clause("fixed_point_gap", r.fixed_point_gap, 1e-4);

    const double eq_bound = 1e-6 * (1.0 + s_ctrl);
    if (r.fixed_point_gap <= 1e-4)
        clause("seminorm_equality", std::abs(s_state - s_ctrl), eq_bound);
    else
        rep.clauses.push_back({"seminorm_equality", ClauseStatus::unverified, std::abs(s_state - s_ctrl), eq_bound});

    if (is_nonpositive(cp.sign()))
        clause("gradient_contraction", s_state - s_ctrl, 1e-9);
    else
        rep.clauses.push_back({"gradient_contraction", ClauseStatus::unverified, s_state - s_ctrl, 1e-9});
    return rep;
}

}  // namespace plob
