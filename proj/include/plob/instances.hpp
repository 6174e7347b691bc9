#pragma once

// Seeded random problem instances shared by the property suites, the
// acceptance run and the CLI's verify mode.

#include <algorithm>
#include <cmath>

#include "plob/mesh.hpp"
#include "plob/plap.hpp"
#include "plob/random.hpp"

namespace plob {

enum class SourceKind { zero, negative_const, positive_const, nonpositive, nonnegative, mixed };

/// A smooth bump psi = s * max(0, 0.5 - 8 |x - c|^2) centred in the domain.
inline Field parabolic_bump(const GridPtr& grid, double scale = 1.0) {
    const Extents& e = grid->extents();
    const double cx = 0.5 * (e.x0 + e.x1), cy = 0.5 * (e.y0 + e.y1);
    const int dim = grid->dim();
    Field psi = Field::from_function(grid, [&](Vec2 x) {
        double r2 = (x.x - cx) * (x.x - cx);
        if (dim == 2) r2 += (x.y - cy) * (x.y - cy);
        return scale * std::max(0.0, 0.5 - 8.0 * r2);
    });
    psi.zero_boundary();
    return psi;
}

inline Field constant_field(const GridPtr& grid, double c) {
    Field f(grid);
    f.values().setConstant(c);
    return f;
}

inline Field random_source(const GridPtr& grid, Rng& rng, SourceKind kind, double amplitude = 2.0) {
    switch (kind) {
        case SourceKind::zero: return Field(grid);
        case SourceKind::negative_const: return constant_field(grid, -amplitude * rng.uniform(0.25, 1.0));
        case SourceKind::positive_const: return constant_field(grid, amplitude * rng.uniform(0.25, 1.0));
        case SourceKind::nonpositive: {
            Field f = random_field(grid, rng, amplitude, 0);
            f.values() = -f.values().cwiseAbs();
            return f;
        }
        case SourceKind::nonnegative: {
            Field f = random_field(grid, rng, amplitude, 0);
            f.values() = f.values().cwiseAbs();
            return f;
        }
        case SourceKind::mixed: break;
    }
    return random_field(grid, rng, amplitude, 0);
}

/// Random obstacle: smoothed noise plus a randomly placed positive bump, so most
/// instances have a nonempty contact set.
inline Field random_obstacle(const GridPtr& grid, Rng& rng, double amplitude = 0.6) {
    Field psi = random_field(grid, rng, amplitude);
    const Extents& e = grid->extents();
    const double cx = rng.uniform(e.x0 + 0.3 * (e.x1 - e.x0), e.x0 + 0.7 * (e.x1 - e.x0));
    const double cy = rng.uniform(e.y0 + 0.3 * (e.y1 - e.y0), e.y0 + 0.7 * (e.y1 - e.y0));
    const double height = rng.uniform(0.1, 0.4);
    const double width = 0.25 * (e.x1 - e.x0);
    const int dim = grid->dim();
    for (Index k = 0; k < grid->num_nodes(); ++k) {
        const Vec2 x = grid->coord(k);
        double r2 = (x.x - cx) * (x.x - cx);
        if (dim == 2) r2 += (x.y - cy) * (x.y - cy);
        psi[k] += height * std::max(0.0, 1.0 - r2 / (width * width));
    }
    psi.zero_boundary();
    return psi;
}

inline ProblemSpec random_problem(const GridPtr& grid, double p, Rng& rng, SourceKind kind) {
    Field f = random_source(grid, rng, kind);
    Field psi = random_obstacle(grid, rng);
    return make_problem(grid, p, std::move(f), std::move(psi));
}

}  // namespace plob
