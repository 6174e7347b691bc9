#pragma once

// Reference computations used by the unit and acceptance tests. None of these
// call into the library's solvers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

/// Thomas algorithm for a tridiagonal system; a = sub, b = diag, c = super.
inline std::vector<double> thomas(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                  std::vector<double> d) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    return x;
}

/// Interior values of the 1D P1 solution of (K + diag(s)) u = rhs with zero
/// boundary, K the stiffness of mesh width h.
inline std::vector<double> dirichlet_1d(std::size_t n, double h, const std::vector<double>& shift,
                                        const std::vector<double>& rhs) {
    std::vector<double> a(n, -1.0 / h), b(n), c(n, -1.0 / h);
    for (std::size_t i = 0; i < n; ++i) b[i] = 2.0 / h + shift[i];
    return thomas(a, b, c, rhs);
}

/// Composite trapezoid rule on uniform nodes.
inline double trapezoid(const std::vector<double>& y, double h) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) s += 0.5 * h * (y[i] + y[i + 1]);
    return s;
}

/// Least concave majorant of nodal data by pairwise chord enumeration:
/// at node k, the maximum over i <= k <= j of the chord from (x_i, y_i) to (x_j, y_j).
inline std::vector<double> concave_majorant_bruteforce(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> out(n, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i <= k; ++i)
            for (std::size_t j = k; j < n; ++j) {
                const double v = i == j ? y[i] : y[i] + (y[j] - y[i]) * (x[k] - x[i]) / (x[j] - x[i]);
                out[k] = std::max(out[k], v);
            }
    return out;
}

/// 1D p-Laplacian energy by direct summation over intervals, lumped load.
inline double energy_1d(const std::vector<double>& v, const std::vector<double>& f, double h, double p,
                        double eps) {
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double g = (v[i + 1] - v[i]) / h;
        const double dens = p == 2.0 ? g * g : std::pow(g * g + eps * eps, p / 2.0) - std::pow(eps, p);
        e += h * dens / p;
    }
    for (std::size_t i = 1; i + 1 < v.size(); ++i) e -= h * f[i] * v[i];
    return e;
}

}  // namespace oracle
