#pragma once

// Structured P1 finite-element discretization of a rectangular domain.
//
// Nodes are numbered lexicographically (x fastest). In 1D the domain [a,b]
// is cut into n+1 segments; in 2D every cell of the (n+1)x(n+1) lattice is
// split along its (i,j)-(i+1,j+1) diagonal into two right triangles. All
// per-element gradients are constant, so |grad v|^p is integrated exactly.

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "plob/errors.hpp"

namespace plob {

using Index = std::size_t;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Vec2 a) { return dot(a, a); }

/// A segment (1D) or triangle (2D) with constant shape-function gradients.
struct Element {
    std::array<Index, 3> vertex{};
    std::array<Vec2, 3> shape_grad{};
    double measure = 0.0;
};

struct Extents {
    double x0 = 0.0, x1 = 1.0;
    double y0 = 0.0, y1 = 1.0;

    friend bool operator==(const Extents&, const Extents&) = default;
};

class Grid {
public:
    Grid(int dim, Index n_per_axis, Extents extents)
        : dim_(dim), n_(n_per_axis), extents_(extents) {
        if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
        if (n_per_axis < 1) throw ConfigError("grid needs at least one interior node per axis");
        if (!(extents.x1 > extents.x0) || (dim == 2 && !(extents.y1 > extents.y0)))
            throw ConfigError("grid extents are degenerate");
        if (!std::isfinite(extents.x0) || !std::isfinite(extents.x1) ||
            !std::isfinite(extents.y0) || !std::isfinite(extents.y1))
            throw ConfigError("grid extents must be finite");

        const Index m = n_ + 2;
        h_ = {(extents.x1 - extents.x0) / static_cast<double>(n_ + 1),
              dim == 2 ? (extents.y1 - extents.y0) / static_cast<double>(n_ + 1) : 0.0};
        num_nodes_ = dim == 1 ? m : m * m;
        boundary_mask_.assign(num_nodes_, false);

        if (dim == 1) {
            boundary_mask_[0] = boundary_mask_[m - 1] = true;
            const double hx = h_[0];
            for (Index i = 0; i + 1 < m; ++i) {
                Element e;
                e.vertex = {i, i + 1, i + 1};
                e.shape_grad = {Vec2{-1.0 / hx, 0.0}, Vec2{1.0 / hx, 0.0}, Vec2{}};
                e.measure = hx;
                elements_.push_back(e);
            }
        } else {
            for (Index j = 0; j < m; ++j)
                for (Index i = 0; i < m; ++i)
                    if (i == 0 || j == 0 || i == m - 1 || j == m - 1) boundary_mask_[node(i, j)] = true;
            const double hx = h_[0], hy = h_[1];
            const double area = 0.5 * hx * hy;
            for (Index j = 0; j + 1 < m; ++j) {
                for (Index i = 0; i + 1 < m; ++i) {
                    const Index v00 = node(i, j), v10 = node(i + 1, j);
                    const Index v01 = node(i, j + 1), v11 = node(i + 1, j + 1);
                    // Lower-right triangle, right angle at v10.
                    Element lower;
                    lower.vertex = {v00, v10, v11};
                    lower.shape_grad = {Vec2{-1.0 / hx, 0.0}, Vec2{1.0 / hx, -1.0 / hy},
                                        Vec2{0.0, 1.0 / hy}};
                    lower.measure = area;
                    elements_.push_back(lower);
                    // Upper-left triangle, right angle at v01.
                    Element upper;
                    upper.vertex = {v00, v11, v01};
                    upper.shape_grad = {Vec2{0.0, -1.0 / hy}, Vec2{1.0 / hx, 0.0},
                                        Vec2{-1.0 / hx, 1.0 / hy}};
                    upper.measure = area;
                    elements_.push_back(upper);
                }
            }
        }

        weights_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_nodes_));
        const double share = 1.0 / static_cast<double>(vertices_per_element());
        for (const auto& e : elements_)
            for (int k = 0; k < vertices_per_element(); ++k)
                weights_[static_cast<Eigen::Index>(e.vertex[k])] += share * e.measure;

        for (Index i = 0; i < num_nodes_; ++i)
            (boundary_mask_[i] ? boundary_ : interior_).push_back(i);
    }

    int dim() const noexcept { return dim_; }
    Index n_per_axis() const noexcept { return n_; }
    Index nodes_per_axis() const noexcept { return n_ + 2; }
    const Extents& extents() const noexcept { return extents_; }
    double h(int axis = 0) const noexcept { return h_[static_cast<std::size_t>(axis)]; }
    Index num_nodes() const noexcept { return num_nodes_; }
    int vertices_per_element() const noexcept { return dim_ + 1; }

    Index node(Index i, Index j = 0) const noexcept { return j * nodes_per_axis() + i; }

    /// Coordinates of node k; y is 0 in 1D.
    Vec2 coord(Index k) const noexcept {
        const Index m = nodes_per_axis();
        const Index i = dim_ == 1 ? k : k % m;
        const Index j = dim_ == 1 ? 0 : k / m;
        return {extents_.x0 + static_cast<double>(i) * h_[0],
                dim_ == 1 ? 0.0 : extents_.y0 + static_cast<double>(j) * h_[1]};
    }

    bool is_boundary(Index k) const noexcept { return boundary_mask_[k]; }
    const std::vector<Index>& interior() const noexcept { return interior_; }
    const std::vector<Index>& boundary() const noexcept { return boundary_; }
    const std::vector<Element>& elements() const noexcept { return elements_; }

    /// Lumped (nodal) quadrature weights; positive, summing to the domain measure.
    const Eigen::VectorXd& weights() const noexcept { return weights_; }

    double measure() const noexcept {
        const double lx = extents_.x1 - extents_.x0;
        return dim_ == 1 ? lx : lx * (extents_.y1 - extents_.y0);
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim_ == b.dim_ && a.n_ == b.n_ && a.extents_ == b.extents_;
    }

private:
    int dim_;
    Index n_;
    Extents extents_;
    std::array<double, 2> h_{};
    Index num_nodes_ = 0;
    std::vector<bool> boundary_mask_;
    std::vector<Index> interior_;
    std::vector<Index> boundary_;
    std::vector<Element> elements_;
    Eigen::VectorXd weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr build_grid(int dim, Index n_per_axis, Extents extents = {}) {
    return std::make_shared<const Grid>(dim, n_per_axis, extents);
}

/// Nodal values of a piecewise-linear function, boundary nodes included.
class Field {
public:
    Field() = default;
    explicit Field(GridPtr grid)
        : grid_(std::move(grid)),
          values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid_->num_nodes()))) {}
    Field(GridPtr grid, Eigen::VectorXd values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != static_cast<Eigen::Index>(grid_->num_nodes()))
            throw ContractViolation("field size does not match grid node count");
    }

    template <class Fn>
    static Field from_function(GridPtr grid, Fn&& fn) {
        Field out(grid);
        for (Index k = 0; k < grid->num_nodes(); ++k) out[k] = fn(grid->coord(k));
        return out;
    }

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    Index size() const noexcept { return static_cast<Index>(values_.size()); }

    const Eigen::VectorXd& values() const noexcept { return values_; }
    Eigen::VectorXd& values() noexcept { return values_; }

    double operator[](Index k) const { return values_[static_cast<Eigen::Index>(k)]; }
    double& operator[](Index k) { return values_[static_cast<Eigen::Index>(k)]; }

    bool has_zero_trace() const {
        for (Index k : grid_->boundary())
            if ((*this)[k] != 0.0) return false;
        return true;
    }

    bool is_finite() const { return values_.allFinite(); }

    Field& zero_boundary() {
        for (Index k : grid_->boundary()) (*this)[k] = 0.0;
        return *this;
    }

    double max_abs() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }

private:
    GridPtr grid_;
    Eigen::VectorXd values_;
};

inline bool same_grid(const Grid& a, const Grid& b) { return &a == &b || a == b; }

inline void require_same_grid(const Field& a, const Field& b) {
    if (!same_grid(a.grid(), b.grid())) throw ContractViolation("fields live on different grids");
}

inline void require_on_grid(const Grid& g, const Field& v) {
    if (!same_grid(g, v.grid())) throw ContractViolation("field does not live on the given grid");
}

inline Field operator+(const Field& a, const Field& b) {
    require_same_grid(a, b);
    return Field(a.grid_ptr(), a.values() + b.values());
}
inline Field operator-(const Field& a, const Field& b) {
    require_same_grid(a, b);
    return Field(a.grid_ptr(), a.values() - b.values());
}
inline Field operator*(double s, const Field& a) { return Field(a.grid_ptr(), s * a.values()); }

inline double max_abs_diff(const Field& a, const Field& b) {
    require_same_grid(a, b);
    return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

/// Constant gradient of v on every element, in element order.
inline std::vector<Vec2> element_gradients(const Grid& grid, const Field& v) {
    require_on_grid(grid, v);
    std::vector<Vec2> out;
    out.reserve(grid.elements().size());
    const int nv = grid.vertices_per_element();
    for (const auto& e : grid.elements()) {
        Vec2 g;
        for (int k = 0; k < nv; ++k) g = g + v[e.vertex[k]] * e.shape_grad[k];
        out.push_back(g);
    }
    return out;
}

inline void require_exponent(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError("exponent p must be finite and > 1");
}

/// Sum over elements of |grad v|^p times element measure.
inline double seminorm_p(const Grid& grid, const Field& v, double p) {
    require_exponent(p);
    const auto grads = element_gradients(grid, v);
    double s = 0.0;
    for (std::size_t e = 0; e < grads.size(); ++e)
        s += std::pow(std::sqrt(norm2(grads[e])), p) * grid.elements()[e].measure;
    return s;
}

inline double integrate(const Grid& grid, const Field& v) {
    require_on_grid(grid, v);
    return grid.weights().dot(v.values());
}

inline double pair(const Grid& grid, const Field& f, const Field& v) {
    require_on_grid(grid, f);
    require_on_grid(grid, v);
    return grid.weights().dot(f.values().cwiseProduct(v.values()));
}

/// Lumped sum of w_i |v_i|^p, the discrete ||v||_p^p.
inline double lp_power(const Grid& grid, const Field& v, double p) {
    require_on_grid(grid, v);
    return grid.weights().dot(v.values().cwiseAbs().array().pow(p).matrix());
}

/// Discrete W^{1,p} norm: (seminorm_p + ||.||_p^p)^{1/p}.
inline double w1p_norm(const Grid& grid, const Field& v, double p) {
    return std::pow(seminorm_p(grid, v, p) + lp_power(grid, v, p), 1.0 / p);
}

}  // namespace plob
