#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "plob/mesh.hpp"
#include "plob/random.hpp"

using namespace plob;

TEST(BuildGrid, UnitIntervalWithThreeInteriorNodes) {
    const auto g = build_grid(1, 3);
    ASSERT_EQ(g->num_nodes(), 5u);
    EXPECT_DOUBLE_EQ(g->h(), 0.25);
    const double xs[] = {0, .25, .5, .75, 1};
    for (Index k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(g->coord(k).x, xs[k]);
    EXPECT_EQ(g->interior(), (std::vector<Index>{1, 2, 3}));
    EXPECT_EQ(g->elements().size(), 4u);
}

TEST(BuildGrid, SquareLatticeCounts) {
    const auto g1 = build_grid(2, 1);
    EXPECT_EQ(g1->num_nodes(), 9u);
    EXPECT_EQ(g1->elements().size(), 8u);
    ASSERT_EQ(g1->interior().size(), 1u);
    EXPECT_DOUBLE_EQ(g1->coord(g1->interior()[0]).x, 0.5);
    EXPECT_DOUBLE_EQ(g1->coord(g1->interior()[0]).y, 0.5);

    const auto g2 = build_grid(2, 2);
    EXPECT_EQ(g2->num_nodes(), 16u);
    EXPECT_EQ(g2->elements().size(), 18u);
    EXPECT_EQ(g2->interior().size(), 4u);
}

TEST(BuildGrid, SpacingForSixtyThreeInteriorNodes) { EXPECT_DOUBLE_EQ(build_grid(1, 63)->h(), 1.0 / 64.0); }

TEST(BuildGrid, RejectsBadArguments) {
    EXPECT_THROW(build_grid(3, 4), ConfigError);
    EXPECT_THROW(build_grid(1, 0), ConfigError);
    EXPECT_THROW(build_grid(1, 4, {1.0, 1.0}), ConfigError);
    EXPECT_THROW(build_grid(2, 4, {0.0, 1.0, 2.0, 2.0}), ConfigError);
}

TEST(BuildGrid, WeightsArePositiveAndSumToMeasure) {
    for (int dim : {1, 2}) {
        const auto g = build_grid(dim, 7, {0.0, 2.0, -1.0, 0.5});
        EXPECT_TRUE((g->weights().array() > 0).all());
        EXPECT_NEAR(g->weights().sum(), g->measure(), 1e-14);
    }
}

TEST(BuildGrid, TrianglesCoverTheDomain) {
    const auto g = build_grid(2, 5, {0.0, 1.0, 0.0, 3.0});
    double area = 0.0;
    for (const auto& e : g->elements()) area += e.measure;
    EXPECT_NEAR(area, 3.0, 1e-13);
}

TEST(ElementGradients, ZeroField) {
    for (int dim : {1, 2}) {
        const auto g = build_grid(dim, 4);
        for (const Vec2& v : element_gradients(*g, Field(g))) EXPECT_EQ(v, (Vec2{0, 0}));
    }
}

TEST(ElementGradients, LinearFieldHasUnitSlope) {
    const auto g = build_grid(1, 9);
    const Field v = Field::from_function(g, [](Vec2 x) { return x.x; });
    for (const Vec2& d : element_gradients(*g, v)) EXPECT_NEAR(d.x, 1.0, 1e-13);
}

TEST(ElementGradients, AffineFieldIn2D) {
    const auto g = build_grid(2, 6, {0.0, 2.0, 0.0, 1.0});
    const Field v = Field::from_function(g, [](Vec2 x) { return 3.0 * x.x - 2.0 * x.y + 1.0; });
    for (const Vec2& d : element_gradients(*g, v)) {
        EXPECT_NEAR(d.x, 3.0, 1e-12);
        EXPECT_NEAR(d.y, -2.0, 1e-12);
    }
}

TEST(ElementGradients, MatchesMidpointDifferenceQuotients) {
    const auto g = build_grid(1, 8);
    Rng rng(11);
    const Field v = random_field(g, rng, 1.0);
    const auto grads = element_gradients(*g, v);
    const double h = g->h();
    for (std::size_t e = 0; e < grads.size(); ++e) {
        // Interpolant at midpoint +- h/4, both inside element e.
        const double lo = v[e] + 0.25 * (v[e + 1] - v[e]);
        const double hi = v[e] + 0.75 * (v[e + 1] - v[e]);
        EXPECT_NEAR(grads[e].x, (hi - lo) / (0.5 * h), 1e-10);
    }
}

TEST(ElementGradients, TwoDimensionalMatchesVertexDifferences) {
    const auto g = build_grid(2, 5);
    Rng rng(5);
    const Field v = random_field(g, rng, 1.0);
    const auto grads = element_gradients(*g, v);
    const auto& els = g->elements();
    for (std::size_t e = 0; e < els.size(); ++e) {
        // Gradient must reproduce value differences along both triangle edges.
        const auto& vt = els[e].vertex;
        for (int k : {1, 2}) {
            const Vec2 d = g->coord(vt[k]) - g->coord(vt[0]);
            EXPECT_NEAR(dot(grads[e], d), v[vt[k]] - v[vt[0]], 1e-12);
        }
    }
}

TEST(Seminorm, ZeroFieldAnyExponent) {
    const auto g = build_grid(2, 4);
    for (double p : {1.5, 2.0, 3.0}) EXPECT_EQ(seminorm_p(*g, Field(g), p), 0.0);
}

TEST(Seminorm, MidpointHat) {
    const auto g = build_grid(1, 1);
    Field hat(g);
    hat[1] = 1.0;
    EXPECT_DOUBLE_EQ(seminorm_p(*g, hat, 2.0), 4.0);
    EXPECT_DOUBLE_EQ(seminorm_p(*g, hat, 3.0), 8.0);
}

TEST(Seminorm, RejectsExponentAtMostOne) {
    const auto g = build_grid(1, 3);
    EXPECT_THROW(seminorm_p(*g, Field(g), 1.0), ConfigError);
}

TEST(Seminorm, IsConvexAlongSegments) {
    const auto g = build_grid(2, 6);
    Rng rng(3);
    for (double p : {1.5, 2.0, 4.0}) {
        const Field a = random_field(g, rng, 1.0), b = random_field(g, rng, 1.0);
        for (double t : {0.2, 0.5, 0.9}) {
            const Field m = (1.0 - t) * a + t * b;
            EXPECT_LE(seminorm_p(*g, m, p),
                      (1.0 - t) * seminorm_p(*g, a, p) + t * seminorm_p(*g, b, p) + 1e-12);
        }
    }
}

TEST(Integrate, ZeroAndOne) {
    const auto g = build_grid(1, 10);
    EXPECT_EQ(integrate(*g, Field(g)), 0.0);
    Field one(g);
    one.values().setOnes();
    EXPECT_NEAR(integrate(*g, one), 1.0, 1e-14);
}

TEST(Integrate, MatchesTrapezoidRuleIn1D) {
    const auto g = build_grid(1, 17, {-1.0, 2.0});
    Rng rng(21);
    for (int rep = 0; rep < 5; ++rep) {
        Field v = random_field(g, rng, 2.0);
        v[0] = rng.uniform(-1, 1);
        v[v.size() - 1] = rng.uniform(-1, 1);
        std::vector<double> y(v.values().data(), v.values().data() + v.size());
        EXPECT_NEAR(integrate(*g, v), oracle::trapezoid(y, g->h()), 1e-13);
    }
}

TEST(Integrate, IsLinear) {
    const auto g = build_grid(2, 5);
    Rng rng(8);
    const Field a = random_field(g, rng, 1.0), b = random_field(g, rng, 1.0);
    EXPECT_NEAR(integrate(*g, 2.0 * a + (-3.0) * b), 2.0 * integrate(*g, a) - 3.0 * integrate(*g, b), 1e-13);
}

TEST(Pair, Examples) {
    const auto g = build_grid(2, 4, {0.0, 2.0, 0.0, 1.5});
    Field one(g);
    one.values().setOnes();
    EXPECT_EQ(pair(*g, Field(g), one), 0.0);
    EXPECT_NEAR(pair(*g, one, one), 3.0, 1e-13);

    Rng rng(4);
    const Field f = random_field(g, rng, 1.0), v = random_field(g, rng, 1.0);
    const Field fv(g, f.values().cwiseProduct(v.values()));
    EXPECT_NEAR(pair(*g, f, v), integrate(*g, fv), 1e-14);
}

TEST(Field, GridMismatchIsAContractViolation) {
    const auto a = build_grid(1, 4), b = build_grid(1, 5);
    EXPECT_THROW(Field(a) + Field(b), ContractViolation);
    EXPECT_THROW(pair(*a, Field(a), Field(b)), ContractViolation);
}

TEST(Field, StructurallyEqualGridsAreInterchangeable) {
    const auto a = build_grid(1, 4), b = build_grid(1, 4);
    EXPECT_NO_THROW(Field(a) + Field(b));
}
