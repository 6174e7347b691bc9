#pragma once

// Seeded property suites behind the CLI's verify mode. Each suite draws its
// own instances from a generator derived from the run seed, so suites can be
// added or reordered without perturbing the others.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "plob/control.hpp"
#include "plob/instances.hpp"
#include "plob/obstacle.hpp"
#include "plob/plap.hpp"
#include "plob/random.hpp"

namespace plob::harness {

struct SuiteResult {
    std::string name;
    int instances = 0;
    int passed = 0;
    int failed = 0;
    double worst = 0.0;      ///< worst observed statistic, in the suite's own sign convention
    double tolerance = 0.0;
    std::string statistic;   ///< what `worst` measures
};

namespace detail {

inline std::uint64_t suite_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Tracks a statistic that must stay <= tolerance.
struct UpperBound {
    SuiteResult r;
    UpperBound(std::string name, std::string stat, double tol) {
        r.name = std::move(name);
        r.statistic = std::move(stat);
        r.tolerance = tol;
        r.worst = -std::numeric_limits<double>::infinity();
    }
    void record(double value) {
        ++r.instances;
        r.worst = std::max(r.worst, value);
        (value <= r.tolerance ? r.passed : r.failed)++;
    }
    void fail() {
        ++r.instances;
        ++r.failed;
        r.worst = std::numeric_limits<double>::infinity();
    }
};

inline SourceKind cycle_kind(int i) {
    static constexpr SourceKind kinds[] = {SourceKind::zero, SourceKind::negative_const,
                                           SourceKind::positive_const, SourceKind::mixed};
    return kinds[i % 4];
}

inline Field nonnegative_bump(const GridPtr& grid, Rng& rng) {
    Field b = random_field(grid, rng, 1.0);
    b.values() = b.values().cwiseAbs();
    b.zero_boundary();
    return b;
}

}  // namespace detail

inline SuiteResult suite_gradient_consistency(const GridPtr& grid, double p, std::uint64_t seed, int count) {
    Rng rng(detail::suite_seed(seed, 1));
    detail::UpperBound acc("gradient_consistency", "relative error vs central differences", 1e-5);
    for (int i = 0; i < count; ++i) {
        const ProblemSpec spec = random_problem(grid, p, rng, SourceKind::mixed);
        Field v = random_field(grid, rng, 1.0);
        const Field g = energy_gradient(spec, v);
        double err2 = 0.0, ref2 = 0.0;
        const double h = 1e-6 * std::max(1.0, v.max_abs());
        for (Index k : grid->interior()) {
            const double save = v[k];
            v[k] = save + h;
            const double ep = energy(spec, v);
            v[k] = save - h;
            const double em = energy(spec, v);
            v[k] = save;
            const double fd = (ep - em) / (2.0 * h);
            err2 += (fd - g[k]) * (fd - g[k]);
            ref2 += g[k] * g[k];
        }
        acc.record(std::sqrt(err2) / std::max(std::sqrt(ref2), 1e-300));
    }
    return acc.r;
}

inline SuiteResult suite_psor_oracle(const GridPtr& grid, std::uint64_t seed, int count) {
    Rng rng(detail::suite_seed(seed, 2));
    detail::UpperBound acc("oracle_psor_p2", "max |solve_obstacle - psor|", 1e-6);
    for (int i = 0; i < count; ++i) {
        const ProblemSpec spec = random_problem(grid, 2.0, rng, SourceKind::mixed);
        try {
            acc.record(max_abs_diff(solve_obstacle(spec).u, psor_oracle(spec)));
        } catch (const SolverFailure&) {
            acc.fail();
        }
    }
    return acc.r;
}

inline SuiteResult suite_concave_envelope(const GridPtr& grid, double p, std::uint64_t seed, int count) {
    Rng rng(detail::suite_seed(seed, 3));
    detail::UpperBound acc("concave_envelope_f0", "max |solve_obstacle - concave envelope|", 1e-6);
    if (grid->dim() != 1) return acc.r;
    for (int i = 0; i < count; ++i) {
        const ProblemSpec spec = random_problem(grid, p, rng, SourceKind::zero);
        try {
            acc.record(max_abs_diff(solve_obstacle(spec).u, concave_envelope_oracle(spec.psi)));
        } catch (const SolverFailure&) {
            acc.fail();
        }
    }
    return acc.r;
}

inline SuiteResult suite_monotonicity(const GridPtr& grid, double p, std::uint64_t seed, int count) {
    Rng rng(detail::suite_seed(seed, 4));
    detail::UpperBound acc("monotonicity", "max (T(psi1) - T(psi2))", 1e-6);
    for (int i = 0; i < count; ++i) {
        const ProblemSpec s1 = random_problem(grid, p, rng, detail::cycle_kind(i));
        const ProblemSpec s2 = s1.with_obstacle(s1.psi + detail::nonnegative_bump(grid, rng));
        try {
            acc.record((solve_obstacle(s1).u - solve_obstacle(s2).u).values().maxCoeff());
        } catch (const SolverFailure&) {
            acc.fail();
        }
    }
    return acc.r;
}

inline SuiteResult suite_involution(const GridPtr& grid, double p, std::uint64_t seed, int count) {
    Rng rng(detail::suite_seed(seed, 5));
    detail::UpperBound acc("involution", "max |T(T(psi)) - T(psi)|", 1e-6);
    for (int i = 0; i < count; ++i) {
        const ProblemSpec spec = random_problem(grid, p, rng, detail::cycle_kind(i));
        try {
            const Field u = solve_obstacle(spec).u;
            acc.record(max_abs_diff(solve_obstacle(spec.with_obstacle(u)).u, u));
        } catch (const SolverFailure&) {
            acc.fail();
        }
    }
    return acc.r;
}

inline SuiteResult suite_minimality(const GridPtr& grid, double p, std::uint64_t seed, int count) {
    Rng rng(detail::suite_seed(seed, 6));
    detail::UpperBound acc("minimality", "max (T(psi) - T(phi)) for phi >= psi", 1e-6);
    for (int i = 0; i < count; ++i) {
        const ProblemSpec spec = random_problem(grid, p, rng, detail::cycle_kind(i));
        const Field phi = spec.psi + detail::nonnegative_bump(grid, rng);
        try {
            const Field w = solve_obstacle(spec.with_obstacle(phi)).u;
            if (!is_f_superharmonic(spec, w, 1e-8)) {
                acc.fail();
                continue;
            }
            acc.record((solve_obstacle(spec).u - w).values().maxCoeff());
        } catch (const SolverFailure&) {
            acc.fail();
        }
    }
    return acc.r;
}

inline SuiteResult suite_complementarity(const GridPtr& grid, double p, std::uint64_t seed, int count) {
    Rng rng(detail::suite_seed(seed, 7));
    detail::UpperBound acc("complementarity_sign", "max(|gap| / bound, -min(mu) / 1e-10)", 1.0);
    for (int i = 0; i < count; ++i) {
        const ProblemSpec spec = random_problem(grid, p, rng, detail::cycle_kind(i));
        try {
            const auto sol = solve_obstacle(spec);
            double min_mu = 0.0;
            for (Index k : grid->interior()) min_mu = std::min(min_mu, sol.mu[k]);
            const double gap_ratio = std::abs(complementarity_gap(spec, sol)) / complementarity_bound(sol, spec.psi);
            acc.record(std::max(gap_ratio, -min_mu / 1e-10));
        } catch (const SolverFailure&) {
            acc.fail();
        }
    }
    return acc.r;
}

inline SuiteResult suite_vi_residual(const GridPtr& grid, double p, std::uint64_t seed, int count) {
    Rng rng(detail::suite_seed(seed, 8));
    detail::UpperBound acc("vi_residual", "max over probes of -residual", 1e-8);
    for (int i = 0; i < count; ++i) {
        const ProblemSpec spec = random_problem(grid, p, rng, detail::cycle_kind(i));
        try {
            const Field u = solve_obstacle(spec).u;
            double worst = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < 100; ++k) {
                const Field v = project_K(u + random_field(grid, rng, rng.uniform(0.01, 0.5)), spec.psi);
                worst = std::max(worst, -vi_residual(spec, u, v));
            }
            acc.record(worst);
        } catch (const SolverFailure&) {
            acc.fail();
        }
    }
    return acc.r;
}

inline SuiteResult suite_energy_inequality(const GridPtr& grid, double p, std::uint64_t seed, int count) {
    Rng rng(detail::suite_seed(seed, 9));
    detail::UpperBound acc("energy_inequality", "lhs - rhs", 1e-9);
    for (int i = 0; i < count; ++i) {
        const ProblemSpec spec = random_problem(grid, p, rng, detail::cycle_kind(i));
        try {
            const Field u = solve_obstacle(spec).u;
            const double lhs = seminorm_p(*grid, u, p) / p;
            const double rhs = seminorm_p(*grid, spec.psi, p) / p + pair(*grid, spec.f, u - spec.psi);
            acc.record(lhs - rhs);
        } catch (const SolverFailure&) {
            acc.fail();
        }
    }
    return acc.r;
}

inline SuiteResult suite_lifting(const GridPtr& grid, double p, std::uint64_t seed, int count) {
    Rng rng(detail::suite_seed(seed, 10));
    detail::UpperBound acc("lifting_f_nonpositive", "J(T(psi)) - J(psi)", 1e-10);
    for (int i = 0; i < count; ++i) {
        const SourceKind kind = i % 2 ? SourceKind::negative_const : SourceKind::nonpositive;
        const ControlProblem cp = make_control_problem(grid, p, random_source(grid, rng, kind),
                                                       random_field(grid, rng, 1.0));
        const Field psi = random_obstacle(grid, rng);
        try {
            const Field lifted = lift_control(cp, psi);
            acc.record(cost_J(cp, lifted).J - cost_J(cp, psi).J);
        } catch (const SolverFailure&) {
            acc.fail();
        }
    }
    return acc.r;
}

inline SuiteResult suite_state_dominance(const GridPtr& grid, double p, std::uint64_t seed, int count) {
    Rng rng(detail::suite_seed(seed, 11));
    detail::UpperBound acc("state_dominates_green", "-min(T(psi) - Gf)", 1e-6);
    for (int i = 0; i < count; ++i) {
        const SourceKind kind = i % 2 ? SourceKind::positive_const : SourceKind::nonnegative;
        const ControlProblem cp = make_control_problem(grid, p, random_source(grid, rng, kind), Field(grid));
        const Field psi = random_obstacle(grid, rng);
        try {
            acc.record(0.0 - verify_state_dominates_green(cp, psi));
        } catch (const SolverFailure&) {
            acc.fail();
        }
    }
    return acc.r;
}

inline std::vector<SuiteResult> run_property_suites(const GridPtr& grid, double p, std::uint64_t seed,
                                                    int count) {
    std::vector<SuiteResult> out;
    out.push_back(suite_gradient_consistency(grid, p, seed, count));
    out.push_back(suite_psor_oracle(grid, seed, count));
    if (grid->dim() == 1) out.push_back(suite_concave_envelope(grid, p, seed, count));
    out.push_back(suite_monotonicity(grid, p, seed, count));
    out.push_back(suite_involution(grid, p, seed, count));
    out.push_back(suite_minimality(grid, p, seed, count));
    out.push_back(suite_complementarity(grid, p, seed, count));
    out.push_back(suite_vi_residual(grid, p, seed, count));
    out.push_back(suite_energy_inequality(grid, p, seed, count));
    out.push_back(suite_lifting(grid, p, seed, count));
    out.push_back(suite_state_dominance(grid, p, seed, count));
    return out;
}

}  // namespace plob::harness
