#pragma once

// Discrete p-Laplacian: flux, energy I(v) = (1/p) int |grad v|^p - int f v,
// its nodal gradient (the weak residual -Delta_p v - f tested against hat
// functions) and the unconstrained Dirichlet solve Gf.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "plob/descent.hpp"
#include "plob/errors.hpp"
#include "plob/mesh.hpp"

namespace plob {

struct ProblemSpec {
    GridPtr grid;
    double p = 2.0;
    double epsilon = 1e-8;  ///< flux regularization, gradient units; 0 disables it
    Field f;                ///< source term
    Field psi;              ///< obstacle, zero boundary trace
    double tol_pg = 1e-11;  ///< relative projected-gradient tolerance
    long max_iters = 400000;

    void validate() const {
        if (!grid) throw ConfigError("problem has no grid");
        require_exponent(p);
        if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be >= 0");
        if (!(tol_pg > 0.0)) throw ConfigError("tol_pg must be > 0");
        if (max_iters <= 0) throw ConfigError("max_iters must be positive");
        require_on_grid(*grid, f);
        require_on_grid(*grid, psi);
        if (!f.is_finite() || !psi.is_finite()) throw ConfigError("source and obstacle must be finite");
        if (!psi.has_zero_trace()) throw ConfigError("obstacle must vanish on the boundary");
    }

    DescentOptions descent_options() const {
        DescentOptions o;
        o.tol = tol_pg;
        o.max_iters = max_iters;
        return o;
    }

    ProblemSpec with_obstacle(Field new_psi) const {
        ProblemSpec s = *this;
        s.psi = std::move(new_psi);
        return s;
    }
};

/// Default regularization: 1e-8 times the larger of 1 and the data magnitudes.
inline double default_epsilon(const Field& f, const Field& psi) {
    return 1e-8 * std::max({1.0, f.max_abs(), psi.max_abs()});
}

/// Builds a validated spec; epsilon defaults to default_epsilon(f, psi).
inline ProblemSpec make_problem(GridPtr grid, double p, Field f, Field psi,
                                std::optional<double> epsilon = std::nullopt) {
    ProblemSpec s;
    s.grid = std::move(grid);
    s.p = p;
    s.epsilon = epsilon ? *epsilon : default_epsilon(f, psi);
    s.f = std::move(f);
    s.psi = std::move(psi);
    s.validate();
    return s;
}

/// (|g|^2 + eps^2)^{(p-2)/2} g; the eps = 0, g = 0 case is 0 for every p.
inline Vec2 sigma(Vec2 g, double p, double epsilon = 0.0) {
    if (p == 2.0) return g;
    const double r2 = norm2(g) + epsilon * epsilon;
    if (r2 == 0.0) return {};
    return std::pow(r2, 0.5 * (p - 2.0)) * g;
}

namespace detail {

inline bool regularized(double p, double epsilon) { return epsilon > 0.0 && p != 2.0; }

/// Per-element energy density, times p. Regularized densities are shifted so 0 maps to 0.
inline double density_times_p(Vec2 g, double p, double epsilon) {
    const double r2 = norm2(g);
    if (p == 2.0) return r2;
    if (!regularized(p, epsilon)) return std::pow(r2, 0.5 * p);
    const double e2 = epsilon * epsilon;
    return std::pow(r2 + e2, 0.5 * p) - std::pow(e2, 0.5 * p);
}

/// Value and Euclidean gradient of I on raw nodal vectors. Boundary entries of `grad` are 0.
inline double energy_eval(const Grid& grid, double p, double epsilon, const Eigen::VectorXd& f,
                          const Eigen::VectorXd& v, Eigen::VectorXd* grad) {
    const int nv = grid.vertices_per_element();
    double stiff = 0.0;
    if (grad) *grad = -grid.weights().cwiseProduct(f);
    for (const auto& e : grid.elements()) {
        Vec2 g;
        for (int k = 0; k < nv; ++k) g = g + v[static_cast<Eigen::Index>(e.vertex[k])] * e.shape_grad[k];
        stiff += e.measure * density_times_p(g, p, epsilon);
        if (grad) {
            const Vec2 flux = e.measure * sigma(g, p, epsilon);
            for (int k = 0; k < nv; ++k) (*grad)[static_cast<Eigen::Index>(e.vertex[k])] += dot(flux, e.shape_grad[k]);
        }
    }
    if (grad)
        for (Index k : grid.boundary()) (*grad)[static_cast<Eigen::Index>(k)] = 0.0;
    return stiff / p - grid.weights().dot(f.cwiseProduct(v));
}

/// Hessian of I on raw nodal vectors (all nodes; boundary rows are assembled but unused).
/// Per element, |e| B^T (a I + b g g^T) B with a = (|g|^2 + eps^2)^{(p-2)/2} and
/// b = (p - 2)(|g|^2 + eps^2)^{(p-4)/2}; this is positive semidefinite for p > 1.
inline Eigen::SparseMatrix<double> energy_hessian(const Grid& grid, double p, double epsilon,
                                                  const Eigen::VectorXd& v) {
    const int nv = grid.vertices_per_element();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(grid.elements().size() * static_cast<std::size_t>(nv * nv));
    // Floor on |g|^2 + eps^2 so the unregularized p < 2 case stays finite at g = 0.
    constexpr double r2_floor = 1e-16;
    for (const auto& e : grid.elements()) {
        Vec2 g;
        for (int k = 0; k < nv; ++k) g = g + v[static_cast<Eigen::Index>(e.vertex[k])] * e.shape_grad[k];
        double a = 1.0, b = 0.0;
        if (p != 2.0) {
            const double r2 = std::max(norm2(g) + epsilon * epsilon, r2_floor);
            a = std::pow(r2, 0.5 * (p - 2.0));
            b = (p - 2.0) * a / r2;
        }
        for (int k = 0; k < nv; ++k)
            for (int l = 0; l < nv; ++l) {
                const Vec2 bk = e.shape_grad[k], bl = e.shape_grad[l];
                const double h = e.measure * (a * dot(bk, bl) + b * dot(g, bk) * dot(g, bl));
                if (h != 0.0)
                    trip.emplace_back(static_cast<Eigen::Index>(e.vertex[k]), static_cast<Eigen::Index>(e.vertex[l]), h);
            }
    }
    const auto n = static_cast<Eigen::Index>(grid.num_nodes());
    Eigen::SparseMatrix<double> H(n, n);
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

}  // namespace detail

inline double energy(const ProblemSpec& spec, const Field& v) {
    require_on_grid(*spec.grid, v);
    return detail::energy_eval(*spec.grid, spec.p, spec.epsilon, spec.f.values(), v.values(), nullptr);
}

/// dI/dv_i at interior nodes: sum_e |e| sigma(grad v) . grad phi_i - w_i f_i. Zero on the boundary.
inline Field energy_gradient(const ProblemSpec& spec, const Field& v) {
    require_on_grid(*spec.grid, v);
    Eigen::VectorXd g;
    detail::energy_eval(*spec.grid, spec.p, spec.epsilon, spec.f.values(), v.values(), &g);
    return Field(spec.grid, std::move(g));
}

/// Nodal pairing of -Delta_p v - f with each interior hat function.
///
/// Identical to energy_gradient; kept as its own entry point because it is
/// read as a distribution, not as a descent direction.
inline Field superharmonic_defect(const ProblemSpec& spec, const Field& v) {
    return energy_gradient(spec, v);
}

inline bool is_f_superharmonic(const ProblemSpec& spec, const Field& v, double tol) {
    const Field d = superharmonic_defect(spec, v);
    for (Index k : spec.grid->interior())
        if (d[k] < -tol) return false;
    return true;
}

/// Weighted residual norm sqrt(sum_i g_i^2 / w_i) over interior nodes.
inline double scaled_residual_norm(const Grid& grid, const Field& g) {
    double s = 0.0;
    for (Index k : grid.interior()) s += g[k] * g[k] / grid.weights()[static_cast<Eigen::Index>(k)];
    return std::sqrt(s);
}

/// The unconstrained zero-trace minimizer of I, i.e. -Delta_p Gf = f.
inline Field green_solve(const ProblemSpec& spec, const std::optional<Field>& warm_start = std::nullopt) {
    spec.validate();
    const Grid& grid = *spec.grid;
    Eigen::VectorXd x0 = warm_start ? warm_start->values() : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.num_nodes()));
    if (warm_start) require_on_grid(grid, *warm_start);

    auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
        return detail::energy_eval(grid, spec.p, spec.epsilon, spec.f.values(), v, &g);
    };
    auto hessian = [&](const Eigen::VectorXd& v) { return detail::energy_hessian(grid, spec.p, spec.epsilon, v); };
    auto rep = minimize_newton(objective, hessian, std::move(x0), Eigen::VectorXd(), grid.boundary(), grid.weights(),
                               spec.descent_options(), "green_solve");
    return Field(spec.grid, std::move(rep.x));
}

}  // namespace plob
