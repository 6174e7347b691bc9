#pragma once

// Seeded, platform-stable random fields. Every random draw in the library and
// the harness goes through Rng so a fixed seed reproduces results bit-for-bit.

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "plob/mesh.hpp"

namespace plob {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1). Built from raw 64-bit draws, not std distributions,
    /// whose output is implementation-defined.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// One damped Jacobi sweep for the Laplacian on interior nodes: v <- (v + mean(neighbours)) / 2.
inline void jacobi_smooth(Field& v) {
    const Grid& g = v.grid();
    const Index m = g.nodes_per_axis();
    const Eigen::VectorXd old = v.values();
    for (Index k : g.interior()) {
        const auto at = [&](Index j) { return old[static_cast<Eigen::Index>(j)]; };
        const double mean = g.dim() == 1 ? 0.5 * (at(k - 1) + at(k + 1))
                                         : 0.25 * (at(k - 1) + at(k + 1) + at(k - m) + at(k + m));
        v[k] = 0.5 * (at(k) + mean);
    }
}

/// Uniform nodal noise in [-amplitude, amplitude], two Jacobi sweeps, zero trace.
inline Field random_field(const GridPtr& grid, Rng& rng, double amplitude, int sweeps = 2) {
    Field v(grid);
    for (Index k = 0; k < grid->num_nodes(); ++k) v[k] = rng.uniform(-amplitude, amplitude);
    v.zero_boundary();
    for (int s = 0; s < sweeps; ++s) jacobi_smooth(v);
    v.zero_boundary();
    return v;
}

}  // namespace plob
