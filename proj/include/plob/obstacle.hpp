#pragma once

// The obstacle map T_f: psi -> argmin { I(v) : v >= psi, v = 0 on the boundary },
// its multiplier, and two independent reference solvers.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "plob/descent.hpp"
#include "plob/errors.hpp"
#include "plob/mesh.hpp"
#include "plob/plap.hpp"

namespace plob {

/// Multiplier entries below this are reported as sign violations.
inline constexpr double kMultiplierFloor = -1e-10;

struct ObstacleSolution {
    Field u;
    Field mu;  ///< nodal multiplier weights, already integrated against hat functions
    double energy_value = 0.0;
    long iterations = 0;
    double pg_norm = 0.0;
    std::vector<Index> active_set;
    std::vector<Index> multiplier_violations;  ///< interior nodes with mu < kMultiplierFloor
};

/// Nodewise max(v, psi), with the boundary pinned to zero.
inline Field project_K(const Field& v, const Field& psi) {
    require_same_grid(v, psi);
    Field out(v.grid_ptr(), v.values().cwiseMax(psi.values()));
    out.zero_boundary();
    return out;
}

inline bool in_K(const Field& v, const Field& psi, double tol = 1e-12) {
    require_same_grid(v, psi);
    if (!v.has_zero_trace()) return false;
    for (Index k : v.grid().interior())
        if (v[k] < psi[k] - tol) return false;
    return true;
}

/// mu_i = dI/dv_i (u): the discrete -Delta_p u - f tested against the i-th hat function.
inline Field extract_multiplier(const ProblemSpec& spec, const Field& u) {
    return energy_gradient(spec, u);
}

inline double complementarity_gap(const Field& mu, const Field& u, const Field& psi) {
    require_same_grid(mu, u);
    require_same_grid(u, psi);
    return mu.values().dot(u.values() - psi.values());
}

inline double complementarity_gap(const ProblemSpec& spec, const ObstacleSolution& sol) {
    return complementarity_gap(sol.mu, sol.u, spec.psi);
}

/// Acceptance bound for the complementarity gap of a converged solution.
inline double complementarity_bound(const ObstacleSolution& sol, const Field& psi) {
    const double mu_l1 = sol.mu.values().cwiseAbs().sum();
    return 1e-8 * (1.0 + mu_l1 * (sol.u - psi).max_abs());
}

/// T_f(psi) by projected descent on I over K(psi). Starts from the warm start, or
/// from max(psi, 0), projected onto K(psi).
inline ObstacleSolution solve_obstacle(const ProblemSpec& spec,
                                       const std::optional<Field>& warm_start = std::nullopt) {
    spec.validate();
    const Grid& grid = *spec.grid;
    const Eigen::VectorXd& psi = spec.psi.values();

    Field start = project_K(warm_start ? *warm_start : Field(spec.grid), spec.psi);

    auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
        return detail::energy_eval(grid, spec.p, spec.epsilon, spec.f.values(), v, &g);
    };
    auto hessian = [&](const Eigen::VectorXd& v) { return detail::energy_hessian(grid, spec.p, spec.epsilon, v); };
    auto rep = minimize_newton(objective, hessian, std::move(start.values()), psi, grid.boundary(), grid.weights(),
                               spec.descent_options(), "solve_obstacle");

    ObstacleSolution sol;
    sol.u = Field(spec.grid, std::move(rep.x));
    sol.mu = extract_multiplier(spec, sol.u);
    sol.energy_value = rep.value;
    sol.iterations = rep.iterations;
    sol.pg_norm = rep.pg_norm;
    const double contact_tol = 1e-9 * (1.0 + spec.psi.max_abs());
    for (Index k : grid.interior()) {
        if (sol.u[k] - spec.psi[k] <= contact_tol) sol.active_set.push_back(k);
        if (sol.mu[k] < kMultiplierFloor) sol.multiplier_violations.push_back(k);
    }
    return sol;
}

/// Discrete left side of the variational inequality,
/// sum_e |e| sigma(grad u).(grad v - grad u) - <f, v - u>, for a probe v in K(psi).
inline double vi_residual(const ProblemSpec& spec, const Field& u, const Field& v) {
    require_on_grid(*spec.grid, u);
    if (!in_K(v, spec.psi)) throw ContractViolation("vi_residual probe is not in K(psi)");
    const auto gu = element_gradients(*spec.grid, u);
    const auto gv = element_gradients(*spec.grid, v);
    const auto& elems = spec.grid->elements();
    double s = 0.0;
    for (std::size_t e = 0; e < elems.size(); ++e)
        s += elems[e].measure * dot(sigma(gu[e], spec.p, spec.epsilon), gv[e] - gu[e]);
    return s - pair(*spec.grid, spec.f, v - u);
}

struct PsorOptions {
    double tol = 1e-13;  ///< max nodal update, relative to 1 + max|u|
    long max_sweeps = 2000000;
    std::optional<double> omega;
};

/// Projected SOR for the p = 2 linear complementarity problem
/// K u - W f >= 0, u >= psi, (u - psi).(K u - W f) = 0, with K written as the
/// five-point (2D) or three-point (1D) stencil. Shares no code with solve_obstacle.
inline Field psor_oracle(const ProblemSpec& spec, const PsorOptions& opt = {}) {
    spec.validate();
    if (spec.p != 2.0) throw ContractViolation("psor_oracle requires p = 2");
    const Grid& grid = *spec.grid;
    const Index m = grid.nodes_per_axis();
    const double pi = std::numbers::pi;
    const double omega = opt.omega.value_or(2.0 / (1.0 + std::sin(pi / static_cast<double>(grid.n_per_axis() + 1))));

    std::vector<double> u(grid.num_nodes(), 0.0);
    for (Index k : grid.interior()) u[k] = std::max(0.0, spec.psi[k]);

    double ax = 0.0, ay = 0.0, load_scale = 0.0;
    if (grid.dim() == 1) {
        ax = 1.0 / grid.h(0);
        load_scale = grid.h(0);
    } else {
        ax = grid.h(1) / grid.h(0);
        ay = grid.h(0) / grid.h(1);
        load_scale = grid.h(0) * grid.h(1);
    }
    const double diag = 2.0 * (ax + ay);

    for (long sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        double change = 0.0, umax = 0.0;
        for (Index k : grid.interior()) {
            double rhs = load_scale * spec.f[k];
            if (grid.dim() == 1) {
                rhs += ax * (u[k - 1] + u[k + 1]);
            } else {
                rhs += ax * (u[k - 1] + u[k + 1]) + ay * (u[k - m] + u[k + m]);
            }
            const double gs = rhs / diag;
            const double next = std::max(spec.psi[k], u[k] + omega * (gs - u[k]));
            change = std::max(change, std::abs(next - u[k]));
            u[k] = next;
            umax = std::max(umax, std::abs(next));
        }
        if (change <= opt.tol * (1.0 + umax)) {
            Field out(spec.grid);
            for (Index k = 0; k < u.size(); ++k) out[k] = u[k];
            return out;
        }
    }
    throw SolverFailure("psor_oracle did not converge", u, opt.max_sweeps, 0.0, 0.0);
}

/// Least concave majorant of the 1D nodal obstacle, boundary points included:
/// the upper convex hull of {(x_i, psi_i)} by monotone chain, interpolated back to the nodes.
inline Field concave_envelope_oracle(const Field& psi) {
    const Grid& grid = psi.grid();
    if (grid.dim() != 1) throw ContractViolation("concave_envelope_oracle is one-dimensional");
    if (!psi.has_zero_trace()) throw ContractViolation("obstacle must vanish on the boundary");

    const Index n = grid.num_nodes();
    auto turn = [&](Index o, Index a, Index b) {
        const Vec2 po{grid.coord(o).x, psi[o]}, pa{grid.coord(a).x, psi[a]}, pb{grid.coord(b).x, psi[b]};
        return (pa.x - po.x) * (pb.y - po.y) - (pa.y - po.y) * (pb.x - po.x);
    };
    std::vector<Index> hull;
    for (Index k = 0; k < n; ++k) {
        while (hull.size() >= 2 && turn(hull[hull.size() - 2], hull.back(), k) >= 0.0) hull.pop_back();
        hull.push_back(k);
    }

    Field out(psi.grid_ptr());
    for (std::size_t s = 0; s + 1 < hull.size(); ++s) {
        const Index a = hull[s], b = hull[s + 1];
        const double xa = grid.coord(a).x, xb = grid.coord(b).x;
        for (Index k = a; k <= b; ++k) {
            const double t = (grid.coord(k).x - xa) / (xb - xa);
            out[k] = (1.0 - t) * psi[a] + t * psi[b];
        }
    }
    return out;
}

}  // namespace plob
