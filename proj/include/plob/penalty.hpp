#pragma once

// Penalty approximation of the obstacle constraint: the constraint v >= psi is
// replaced by (1/delta) int B(v - psi) with B' = beta, beta(x) = min(x, 0).

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plob/descent.hpp"
#include "plob/errors.hpp"
#include "plob/mesh.hpp"
#include "plob/obstacle.hpp"
#include "plob/plap.hpp"

namespace plob {

inline double beta(double x) { return x > 0.0 ? 0.0 : x; }

/// Antiderivative of beta vanishing at 0.
inline double B(double r) { return r > 0.0 ? 0.0 : 0.5 * r * r; }

inline void require_delta(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("penalty parameter delta must be > 0");
}

namespace detail {

inline double penalized_eval(const ProblemSpec& spec, double delta, const Eigen::VectorXd& v,
                             Eigen::VectorXd* grad) {
    const Grid& grid = *spec.grid;
    double value = energy_eval(grid, spec.p, spec.epsilon, spec.f.values(), v, grad);
    const Eigen::VectorXd& w = grid.weights();
    double penalty = 0.0;
    for (Index k : grid.interior()) {
        const auto i = static_cast<Eigen::Index>(k);
        const double r = v[i] - spec.psi[k];
        if (r >= 0.0) continue;
        penalty += w[i] * B(r);
        if (grad) (*grad)[i] += w[i] * beta(r) / delta;
    }
    return value + penalty / delta;
}

inline Eigen::SparseMatrix<double> penalized_hessian(const ProblemSpec& spec, double delta, const Eigen::VectorXd& v) {
    const Grid& grid = *spec.grid;
    Eigen::SparseMatrix<double> H = energy_hessian(grid, spec.p, spec.epsilon, v);
    for (Index k : grid.interior()) {
        const auto i = static_cast<Eigen::Index>(k);
        if (v[i] < spec.psi[k]) H.coeffRef(i, i) += grid.weights()[i] / delta;
    }
    return H;
}

}  // namespace detail

/// I(v) + (1/delta) sum_i w_i B(v_i - psi_i).
inline double penalized_energy(const ProblemSpec& spec, double delta, const Field& v) {
    require_delta(delta);
    require_on_grid(*spec.grid, v);
    return detail::penalized_eval(spec, delta, v.values(), nullptr);
}

/// Residual of the penalized equation -Delta_p u + (1/delta) beta(u - psi) = f, tested
/// against hat functions.
inline Field penalized_gradient(const ProblemSpec& spec, double delta, const Field& v) {
    require_delta(delta);
    require_on_grid(*spec.grid, v);
    Eigen::VectorXd g;
    detail::penalized_eval(spec, delta, v.values(), &g);
    return Field(spec.grid, std::move(g));
}

/// Minimizer u^delta of the penalized energy over zero-trace fields.
inline Field penalized_solve(const ProblemSpec& spec, double delta,
                             const std::optional<Field>& warm_start = std::nullopt) {
    spec.validate();
    require_delta(delta);
    const Grid& grid = *spec.grid;
    Eigen::VectorXd x0 = warm_start ? warm_start->values() : spec.psi.values();
    if (warm_start) require_on_grid(grid, *warm_start);

    auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
        return detail::penalized_eval(spec, delta, v, &g);
    };
    auto hessian = [&](const Eigen::VectorXd& v) { return detail::penalized_hessian(spec, delta, v); };
    auto rep = minimize_newton(objective, hessian, std::move(x0), Eigen::VectorXd(), grid.boundary(), grid.weights(),
                               spec.descent_options(), "penalized_solve");
    return Field(spec.grid, std::move(rep.x));
}

/// Nodal weights -(1/delta) w_i beta(u_i - psi_i); nonnegative by construction.
inline Field penalty_multiplier(const ProblemSpec& spec, double delta, const Field& u_delta) {
    require_delta(delta);
    require_on_grid(*spec.grid, u_delta);
    Field mu(spec.grid);
    for (Index k : spec.grid->interior())
        mu[k] = -spec.grid->weights()[static_cast<Eigen::Index>(k)] * beta(u_delta[k] - spec.psi[k]) / delta;
    return mu;
}

/// (1/delta) int B(u - psi).
inline double penalty_mass(const ProblemSpec& spec, double delta, const Field& u_delta) {
    require_delta(delta);
    double s = 0.0;
    for (Index k : spec.grid->interior())
        s += spec.grid->weights()[static_cast<Eigen::Index>(k)] * B(u_delta[k] - spec.psi[k]);
    return s / delta;
}

/// max_i (u_i - psi_i)^-.
inline double constraint_violation(const Field& u, const Field& psi) {
    require_same_grid(u, psi);
    double v = 0.0;
    for (Index k : u.grid().interior()) v = std::max(v, psi[k] - u[k]);
    return v;
}

struct PenaltyPath {
    std::vector<double> deltas;
    std::vector<Field> solutions;
    std::vector<double> errors;  ///< discrete W^{1,p} distance to the direct obstacle solution
    std::vector<Field> penalty_multipliers;
    std::vector<double> penalty_masses;
    std::vector<double> complementarity;  ///< <penalty multiplier, u_direct - psi>
    std::vector<double> violations;       ///< max (u^delta - psi)^-
    ObstacleSolution direct;
    std::optional<std::string> failure;
};

/// Geometric schedule first, first*ratio, ... down to last (inclusive up to rounding).
inline std::vector<double> geometric_schedule(double first = 1e-1, double last = 1e-6, double ratio = 0.1) {
    if (!(first > 0.0) || !(last > 0.0) || !(ratio > 0.0 && ratio < 1.0) || last > first)
        throw ConfigError("invalid geometric delta schedule");
    std::vector<double> out;
    for (int k = 0;; ++k) {
        const double d = first * std::pow(ratio, k);
        if (d < last * (1.0 - 1e-9)) break;
        out.push_back(d);
    }
    return out;
}

inline void require_decreasing_schedule(const std::vector<double>& deltas) {
    if (deltas.empty()) throw ConfigError("delta schedule is empty");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        require_delta(deltas[i]);
        if (i > 0 && !(deltas[i] < deltas[i - 1])) throw ConfigError("delta schedule must be strictly decreasing");
    }
}

/// Solves along a decreasing delta schedule, warm-starting each solve from the last.
inline PenaltyPath continuation(const ProblemSpec& spec, const std::vector<double>& deltas) {
    require_decreasing_schedule(deltas);
    PenaltyPath path;
    path.direct = solve_obstacle(spec);
    const Field gap_weight = path.direct.u - spec.psi;

    std::optional<Field> warm;
    for (double delta : deltas) {
        Field u;
        try {
            u = penalized_solve(spec, delta, warm);
        } catch (const SolverFailure& e) {
            path.failure = std::string("delta = ") + std::to_string(delta) + ": " + e.what();
            break;
        }
        Field mu = penalty_multiplier(spec, delta, u);
        path.deltas.push_back(delta);
        path.errors.push_back(w1p_norm(*spec.grid, u - path.direct.u, spec.p));
        path.penalty_masses.push_back(penalty_mass(spec, delta, u));
        path.complementarity.push_back(mu.values().dot(gap_weight.values()));
        path.violations.push_back(constraint_violation(u, spec.psi));
        path.penalty_multipliers.push_back(std::move(mu));
        warm = u;
        path.solutions.push_back(std::move(u));
    }
    return path;
}

/// True when each entry is at most (1 + slack) times its predecessor, plus an absolute floor.
inline bool nonincreasing_with_slack(const std::vector<double>& xs, double slack = 0.1,
                                     double floor = 0.0) {
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i] > (1.0 + slack) * xs[i - 1] + floor) return false;
    return true;
}

}  // namespace plob
