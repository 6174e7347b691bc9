#pragma once

// Newton method for smooth convex objectives under nodewise lower bounds, with
// a set of coordinates pinned to zero.
//
// Each step minimizes the local quadratic model over the feasible set with a
// primal-dual active-set iteration, then backtracks along the resulting
// feasible direction with an Armijo rule. When the model step cannot be
// computed the projected scaled gradient is used instead. Stationarity is the
// projected gradient measured in the lumped mass metric W, so W^{-1} g is the
// nodal residual of the discrete PDE.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "plob/errors.hpp"

namespace plob {

struct DescentOptions {
    double tol = 1e-11;          ///< stop when pg_norm <= tol * (1 + |value|)
    long max_iters = 200000;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    /// Energy increases below this multiple of machine precision (relative to
    /// the value scale) are treated as roundoff, not ascent.
    double roundoff_slack = 64.0;
    /// A bounded Newton step shorter than this many ulps of max|x| ends the run as
    /// converged to working precision.
    double resolution_ulps = 4.0;
};

struct DescentReport {
    Eigen::VectorXd x;
    double value = 0.0;
    double pg_norm = 0.0;
    long iterations = 0;
    long evaluations = 0;
};

namespace detail {

template <class Project>
double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& w, Project& project) {
    Eigen::VectorXd trial = x - g.cwiseQuotient(w);
    project(trial);
    const Eigen::VectorXd d = trial - x;
    return std::sqrt(d.cwiseProduct(d).dot(w));
}

/// Minimizer d of g.d + d.H d / 2 subject to x + d >= lower and d = 0 on fixed
/// coordinates, by primal-dual active sets. Returns false if the iteration does
/// not settle or a reduced solve fails.
inline bool bounded_newton_step(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& g,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                                const std::vector<char>& fixed, Eigen::VectorXd& d, int max_rounds = 100) {
    const Eigen::Index n = x.size();
    const bool bounded = lower.size() == n;
    const Eigen::VectorXd diag = H.diagonal();
    std::vector<char> active(static_cast<std::size_t>(n), 0);
    if (bounded)
        for (Eigen::Index i = 0; i < n; ++i)
            active[static_cast<std::size_t>(i)] = !fixed[static_cast<std::size_t>(i)] && g[i] + diag[i] * (lower[i] - x[i]) > 0.0;

    std::vector<Eigen::Index> pos(static_cast<std::size_t>(n));
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    d.setZero(n);
    for (int round = 0; round < max_rounds; ++round) {
        Eigen::Index m = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto si = static_cast<std::size_t>(i);
            pos[si] = -1;
            if (fixed[si]) d[i] = 0.0;
            else if (active[si]) d[i] = lower[i] - x[i];
            else pos[si] = m++;
        }
        Eigen::VectorXd rhs(m);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(H.nonZeros()));
        for (Eigen::Index i = 0; i < n; ++i)
            if (pos[static_cast<std::size_t>(i)] >= 0) rhs[pos[static_cast<std::size_t>(i)]] = -g[i];
        for (int col = 0; col < H.outerSize(); ++col)
            for (Eigen::SparseMatrix<double>::InnerIterator e(H, col); e; ++e) {
                const Eigen::Index r = pos[static_cast<std::size_t>(e.row())];
                if (r < 0) continue;
                const Eigen::Index c = pos[static_cast<std::size_t>(e.col())];
                if (c >= 0) trip.emplace_back(r, c, e.value());
                else rhs[r] -= e.value() * d[e.col()];
            }
        if (m > 0) {
            Eigen::SparseMatrix<double> Hf(m, m);
            Hf.setFromTriplets(trip.begin(), trip.end());
            ldlt.compute(Hf);
            if (ldlt.info() != Eigen::Success) return false;
            const Eigen::VectorXd df = ldlt.solve(rhs);
            if (ldlt.info() != Eigen::Success || !df.allFinite()) return false;
            for (Eigen::Index i = 0; i < n; ++i)
                if (pos[static_cast<std::size_t>(i)] >= 0) d[i] = df[pos[static_cast<std::size_t>(i)]];
        }
        if (!bounded) return true;

        // Multipliers on the active set; a node enters when its step violates the bound
        // and leaves when its multiplier turns negative.
        const Eigen::VectorXd lam = g + H * d;
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto si = static_cast<std::size_t>(i);
            if (fixed[si]) continue;
            const bool next = active[si] ? lam[i] > 0.0 : x[i] + d[i] < lower[i];
            if (next != static_cast<bool>(active[si])) {
                active[si] = next;
                changed = true;
            }
        }
        if (!changed) return true;
    }
    return false;
}

}  // namespace detail

/// Minimizes objective(x, g) over {x >= lower, x_i = 0 for i in pinned}.
/// `hessian(x)` returns the symmetric Hessian; entries of pinned coordinates are ignored.
/// Pass an empty `lower` for no bound.
template <class Objective, class Hessian>
DescentReport minimize_newton(Objective&& objective, Hessian&& hessian, Eigen::VectorXd x,
                              const Eigen::VectorXd& lower, const std::vector<std::size_t>& pinned,
                              const Eigen::VectorXd& w, const DescentOptions& opt,
                              const std::string& what = "newton") {
    const Eigen::Index n = x.size();
    const bool bounded = lower.size() == n;
    std::vector<char> is_pinned(static_cast<std::size_t>(n), 0);
    for (std::size_t k : pinned) is_pinned[k] = 1;

    auto project = [&](Eigen::VectorXd& v) {
        if (bounded) v = v.cwiseMax(lower);
        for (std::size_t k : pinned) v[static_cast<Eigen::Index>(k)] = 0.0;
    };
    project(x);

    Eigen::VectorXd g(n), g_trial(n), x_trial(n), d(n);
    double value = objective(x, g);
    long evals = 1;
    constexpr double eps = std::numeric_limits<double>::epsilon();

    auto pg_norm = [&] { return detail::projected_gradient_norm(x, g, w, project); };
    double pg = pg_norm();
    long it = 0;
    int stalled = 0;
    bool gradient_step = false;
    bool resolution_limited = false;

    for (; it < opt.max_iters; ++it) {
        if (pg <= opt.tol * (1.0 + std::abs(value))) break;

        bool have_direction = false;
        if (!gradient_step && detail::bounded_newton_step(hessian(x), g, x, lower, is_pinned, d)) {
            // A model step below the resolution of x means no representable iterate improves on x.
            if (d.cwiseAbs().maxCoeff() <= opt.resolution_ulps * eps * std::max(1.0, x.cwiseAbs().maxCoeff())) {
                resolution_limited = true;
                break;
            }
            have_direction = g.dot(d) < 0.0;
        }
        if (!have_direction) {
            d = x - g.cwiseQuotient(w);
            project(d);
            d -= x;
        }
        gradient_step = false;
        const double slope = g.dot(d);

        // x + lambda d stays feasible for lambda in [0, 1]; the projection only trims rounding.
        const double slack = opt.roundoff_slack * eps * (std::abs(value) + std::abs(g.dot(x)));
        double lambda = 1.0, trial_value = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < 60 && slope < 0.0; ++bt) {
            x_trial = x + lambda * d;
            project(x_trial);
            if (x_trial == x) break;
            trial_value = objective(x_trial, g_trial);
            ++evals;
            if (trial_value <= value + opt.armijo_c * lambda * slope + slack) {
                accepted = true;
                break;
            }
            lambda *= opt.backtrack;
        }
        if (!accepted) {
            // A failed Newton search retries along the gradient; a failed gradient search ends the run.
            if (have_direction) {
                gradient_step = true;
                continue;
            }
            if (++stalled > 3) break;
            continue;
        }
        stalled = 0;
        x.swap(x_trial);
        g.swap(g_trial);
        value = trial_value;
        pg = pg_norm();
    }

    if (!resolution_limited && pg > opt.tol * (1.0 + std::abs(value))) {
        char msg[160];
        std::snprintf(msg, sizeof msg, ": projected-gradient norm %.3e above tolerance %.3e after %ld iterations", pg,
                      opt.tol * (1.0 + std::abs(value)), it);
        throw SolverFailure(what + msg, std::vector<double>(x.data(), x.data() + x.size()), it, pg, value);
    }
    return {std::move(x), value, pg, it, evals};
}

}  // namespace plob
