#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "plob/instances.hpp"
#include "plob/penalty.hpp"
#include "plob/random.hpp"

using namespace plob;

namespace {

std::vector<double> to_vec(const Field& v) { return {v.values().data(), v.values().data() + v.size()}; }

Field very_negative(const GridPtr& g) {
    Field psi = constant_field(g, -100.0);
    return psi.zero_boundary();
}

double l1(const Field& a) { return a.values().cwiseAbs().sum(); }

}  // namespace

TEST(Beta, Examples) {
    EXPECT_EQ(beta(-2.0), -2.0);
    EXPECT_EQ(beta(3.0), 0.0);
    EXPECT_EQ(beta(0.0), 0.0);
}

TEST(Beta, IsNonpositiveAndNondecreasing) {
    double prev = beta(-10.0);
    for (double x = -10.0; x <= 10.0; x += 0.01) {
        EXPECT_LE(beta(x), 0.0);
        EXPECT_GE(beta(x), prev);
        prev = beta(x);
    }
}

TEST(B, Examples) {
    EXPECT_EQ(B(-2.0), 2.0);
    EXPECT_EQ(B(1.0), 0.0);
    EXPECT_EQ(B(0.0), 0.0);
}

TEST(B, DerivativeIsBeta) {
    for (double r : {-3.0, -1.0, -0.2, 0.4, 2.0})
        EXPECT_NEAR((B(r + 1e-6) - B(r - 1e-6)) / 2e-6, beta(r), 1e-8);
}

TEST(PenalizedEnergy, FeasibleFieldHasNoPenalty) {
    const auto g = build_grid(2, 6);
    Rng rng(1);
    const ProblemSpec spec = random_problem(g, 3.0, rng, SourceKind::mixed);
    const Field v = project_K(random_field(g, rng, 1.0), spec.psi);
    EXPECT_EQ(penalized_energy(spec, 1e-3, v), energy(spec, v));
}

TEST(PenalizedEnergy, UnitViolation) {
    const auto g = build_grid(1, 9);
    const ProblemSpec spec = make_problem(g, 2.0, Field(g), parabolic_bump(g));
    Field v = spec.psi - constant_field(g, 1.0);
    v.zero_boundary();
    // (1/delta) sum_interior w_i B(-1) = sum of interior weights = measure - h.
    EXPECT_NEAR(penalized_energy(spec, 0.5, v), energy(spec, v) + 1.0 - g->h(), 1e-13);
}

TEST(PenalizedEnergy, MatchesDirectSummation) {
    const auto g = build_grid(1, 25);
    Rng rng(2);
    for (double p : {1.5, 2.0, 3.0}) {
        const ProblemSpec spec = random_problem(g, p, rng, SourceKind::mixed);
        const Field v = random_field(g, rng, 1.0);
        const double delta = rng.uniform(1e-3, 1.0);
        double ref = oracle::energy_1d(to_vec(v), to_vec(spec.f), g->h(), p, spec.epsilon);
        for (Index k = 1; k + 1 < g->num_nodes(); ++k) {
            const double r = std::min(v[k] - spec.psi[k], 0.0);
            ref += g->h() * 0.5 * r * r / delta;
        }
        EXPECT_NEAR(penalized_energy(spec, delta, v), ref, 1e-11);
    }
}

TEST(PenalizedGradient, MatchesCentralDifferences) {
    const auto g = build_grid(2, 5);
    Rng rng(3);
    const ProblemSpec spec = random_problem(g, 3.0, rng, SourceKind::mixed);
    Field v = random_field(g, rng, 0.5);
    const double delta = 0.05;
    const Field gr = penalized_gradient(spec, delta, v);
    for (Index k : g->interior()) {
        const double save = v[k];
        v[k] = save + 1e-6;
        const double ep = penalized_energy(spec, delta, v);
        v[k] = save - 1e-6;
        const double em = penalized_energy(spec, delta, v);
        v[k] = save;
        EXPECT_NEAR((ep - em) / 2e-6, gr[k], 1e-6 * (1 + std::abs(gr[k])));
    }
}

TEST(PenalizedHessian, MatchesGradientDifferencesAwayFromTheKink) {
    const auto g = build_grid(1, 10);
    Rng rng(5);
    const ProblemSpec spec = random_problem(g, 2.0, rng, SourceKind::mixed);
    Field v = random_field(g, rng, 0.5);
    // Keep every node at least 1e-3 from the obstacle so the penalty term is smooth under the step.
    for (Index k : g->interior())
        if (std::abs(v[k] - spec.psi[k]) < 1e-3) v[k] = spec.psi[k] - 1e-2;
    const double delta = 0.05;
    const Eigen::MatrixXd H(detail::penalized_hessian(spec, delta, v.values()));
    for (Index j : g->interior()) {
        const double save = v[j];
        v[j] = save + 1e-6;
        const Field gp = penalized_gradient(spec, delta, v);
        v[j] = save - 1e-6;
        const Field gm = penalized_gradient(spec, delta, v);
        v[j] = save;
        for (Index i : g->interior()) {
            const double h = H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            EXPECT_NEAR((gp[i] - gm[i]) / 2e-6, h, 1e-5 * (1 + std::abs(h))) << i << "," << j;
        }
    }
}

TEST(PenalizedSolve, RejectsNonpositiveDelta) {
    const auto g = build_grid(1, 4);
    const ProblemSpec spec = make_problem(g, 2.0, Field(g), Field(g));
    EXPECT_THROW(penalized_solve(spec, 0.0), ConfigError);
    EXPECT_THROW(penalized_solve(spec, -1.0), ConfigError);
}

TEST(PenalizedSolve, InactivePenaltyMatchesGreenSolve) {
    const auto g = build_grid(1, 32);
    Rng rng(4);
    for (double p : {1.5, 2.0, 3.0}) {
        const ProblemSpec spec = make_problem(g, p, random_source(g, rng, SourceKind::mixed), very_negative(g));
        for (double delta : {1e-1, 1e-4})
            EXPECT_LE(max_abs_diff(penalized_solve(spec, delta), green_solve(spec)), 1e-8);
    }
}

TEST(PenalizedSolve, FullContactSolvesShiftedLinearSystem) {
    const Index n = 50;
    const auto g = build_grid(1, n);
    const ProblemSpec spec = make_problem(g, 2.0, constant_field(g, -1.0), Field(g));
    const double h = g->h();
    for (double delta : {1e-1, 1e-3, 1e-5}) {
        const Field u = penalized_solve(spec, delta);
        // Every node violates, so beta(u) = u and (K + W / delta) u = -W 1.
        const auto ref = oracle::dirichlet_1d(n, h, std::vector<double>(n, h / delta), std::vector<double>(n, -h));
        for (Index i = 0; i < n; ++i) {
            ASSERT_LT(ref[i], 0.0);
            EXPECT_NEAR(u[i + 1], ref[i], 1e-9 * (1 + std::abs(ref[i])));
        }
    }
}

TEST(PenalizedSolve, BumpAtSmallDeltaIsCloseToObstacleSolution) {
    // The gradient error at the free boundary scales like delta / h; at n = 64 the
    // 1e-3 level is reached at delta = 1e-5 (delta = 1e-4 gives about 2e-3 to 3e-3).
    const auto g = build_grid(1, 64);
    for (double p : {2.0, 3.0}) {
        const ProblemSpec spec = make_problem(g, p, constant_field(g, -1.0), parabolic_bump(g, 0.2));
        const Field ref = solve_obstacle(spec).u;
        const double e4 = w1p_norm(*g, penalized_solve(spec, 1e-4) - ref, p);
        const double e5 = w1p_norm(*g, penalized_solve(spec, 1e-5) - ref, p);
        EXPECT_LE(e4, 5e-3) << "p " << p;
        EXPECT_LE(e5, 1e-3) << "p " << p;
        EXPECT_LT(e5, e4);
    }
}

TEST(PenalizedSolve, IsIndependentOfWarmStart) {
    const auto g = build_grid(2, 8);
    Rng rng(5);
    const ProblemSpec spec = random_problem(g, 3.0, rng, SourceKind::mixed);
    const Field a = penalized_solve(spec, 1e-3);
    const Field b = penalized_solve(spec, 1e-3, random_field(g, rng, 2.0));
    EXPECT_LE(max_abs_diff(a, b), 1e-7);
}

TEST(PenaltyMultiplier, FeasibleStateGivesZero) {
    const auto g = build_grid(1, 10);
    const ProblemSpec spec = make_problem(g, 2.0, Field(g), parabolic_bump(g));
    EXPECT_EQ(penalty_multiplier(spec, 1e-2, project_K(Field(g), spec.psi)).max_abs(), 0.0);
}

TEST(PenaltyMultiplier, FullContactConvergesToDirectMultiplier) {
    const auto g = build_grid(1, 64);
    const ProblemSpec spec = make_problem(g, 2.0, constant_field(g, -1.0), Field(g));
    const auto path = continuation(spec, geometric_schedule(1e-1, 1e-5));
    ASSERT_FALSE(path.failure);
    EXPECT_LE(l1(path.penalty_multipliers.back() - path.direct.mu), 1e-2);
}

TEST(Schedule, GeometricDefault) {
    const auto d = geometric_schedule();
    ASSERT_EQ(d.size(), 6u);
    EXPECT_DOUBLE_EQ(d.front(), 1e-1);
    EXPECT_NEAR(d.back(), 1e-6, 1e-20);
    EXPECT_THROW(geometric_schedule(1e-6, 1e-1), ConfigError);
}

TEST(Continuation, RejectsBadSchedules) {
    const auto g = build_grid(1, 4);
    const ProblemSpec spec = make_problem(g, 2.0, Field(g), Field(g));
    EXPECT_THROW(continuation(spec, {}), ConfigError);
    EXPECT_THROW(continuation(spec, {1e-2, 1e-1}), ConfigError);
    EXPECT_THROW(continuation(spec, {1e-1, 0.0}), ConfigError);
}

TEST(Continuation, BumpBenchmark) {
    const auto g = build_grid(1, 64);
    for (double p : {2.0, 3.0}) {
        const ProblemSpec spec = make_problem(g, p, constant_field(g, -1.0), parabolic_bump(g, 0.2));
        const auto path = continuation(spec, geometric_schedule(1e-1, 1e-5));
        ASSERT_FALSE(path.failure);
        ASSERT_EQ(path.deltas.size(), 5u);
        EXPECT_TRUE(nonincreasing_with_slack(path.errors, 0.1));
        EXPECT_LE(path.errors.back(), 1e-3);
        EXPECT_LE(std::abs(path.complementarity.back()), 1e-4);
        for (double m : path.penalty_masses) EXPECT_LE(m, 2.0 * path.penalty_masses.front());
    }
}

TEST(Continuation, NoContactErrorsVanish) {
    const auto g = build_grid(1, 32);
    Rng rng(6);
    const ProblemSpec spec = make_problem(g, 3.0, random_source(g, rng, SourceKind::mixed), very_negative(g));
    const auto path = continuation(spec, geometric_schedule(1e-1, 1e-5));
    for (double e : path.errors) EXPECT_LE(e, 1e-8);
    for (double m : path.penalty_masses) EXPECT_EQ(m, 0.0);
}

TEST(Continuation, ComplementarityDecaysAlongPath) {
    const auto g = build_grid(1, 64);
    const ProblemSpec spec = make_problem(g, 2.0, constant_field(g, -1.0), parabolic_bump(g, 0.5));
    const auto path = continuation(spec, geometric_schedule());
    ASSERT_FALSE(path.failure);
    EXPECT_LE(std::abs(path.complementarity.back()), std::abs(path.complementarity.front()));
    EXPECT_LE(std::abs(path.complementarity.back()), 1e-4);
}

TEST(NonincreasingWithSlack, Semantics) {
    EXPECT_TRUE(nonincreasing_with_slack({1.0, 1.05, 0.5}, 0.1));
    EXPECT_FALSE(nonincreasing_with_slack({1.0, 1.2}, 0.1));
    EXPECT_TRUE(nonincreasing_with_slack({1e-12, 3e-12}, 0.1, 1e-10));
}
