#pragma once

// Named field presets used in experiment configs:
//
//   const:c                 constant c
//   bump:center,width,height  smooth compactly supported bump h*exp(1 - 1/(1 - r^2)),
//                           r = |x - center| / width (2D: center applies to both axes)
//   sine:k,amp              amp * sin(k pi x~) (2D: times sin(k pi y~)), x~ in [0,1]
//   samples:[v0,v1,...]     explicit nodal values, one per node, boundary included
//   random:amp              seeded smoothed noise (the run's generator)

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "plob/errors.hpp"
#include "plob/mesh.hpp"
#include "plob/random.hpp"

namespace plob::harness {

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\n\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\n\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string& tok, const std::string& preset) {
    const std::string t = trim(tok);
    if (t.empty()) throw ConfigError("empty number in preset '" + preset + "'");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v))
        throw ConfigError("bad number '" + t + "' in preset '" + preset + "'");
    return v;
}

inline std::vector<double> parse_list(std::string_view body, const std::string& preset) {
    std::vector<double> out;
    std::string cur;
    for (char c : body) {
        if (c == ',') {
            out.push_back(parse_number(cur, preset));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(parse_number(cur, preset));
    return out;
}

inline void expect_arity(const std::vector<double>& args, std::size_t n, const std::string& preset) {
    if (args.size() != n)
        throw ConfigError("preset '" + preset + "' expects " + std::to_string(n) + " parameter(s)");
}

}  // namespace detail

/// Builds a field from a preset string. With zero_trace the boundary is clipped to 0,
/// as required for obstacles and controls.
inline Field materialize_preset(const std::string& preset, const GridPtr& grid, Rng* rng = nullptr,
                                bool zero_trace = false) {
    const auto colon = preset.find(':');
    if (colon == std::string::npos) throw ConfigError("preset '" + preset + "' has no ':'");
    const std::string name = detail::trim(std::string_view(preset).substr(0, colon));
    const std::string_view body = std::string_view(preset).substr(colon + 1);
    const Extents& ext = grid->extents();
    const int dim = grid->dim();

    Field out(grid);
    if (name == "const") {
        const auto a = detail::parse_list(body, preset);
        detail::expect_arity(a, 1, preset);
        out.values().setConstant(a[0]);
    } else if (name == "bump") {
        const auto a = detail::parse_list(body, preset);
        detail::expect_arity(a, 3, preset);
        const double c = a[0], width = a[1], height = a[2];
        if (!(width > 0.0)) throw ConfigError("bump width must be > 0");
        out = Field::from_function(grid, [&](Vec2 x) {
            double r2 = (x.x - c) * (x.x - c);
            if (dim == 2) r2 += (x.y - c) * (x.y - c);
            r2 /= width * width;
            return r2 < 1.0 ? height * std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
        });
    } else if (name == "sine") {
        const auto a = detail::parse_list(body, preset);
        detail::expect_arity(a, 2, preset);
        const double k = a[0], amp = a[1];
        const double pi = std::numbers::pi;
        out = Field::from_function(grid, [&](Vec2 x) {
            const double sx = std::sin(k * pi * (x.x - ext.x0) / (ext.x1 - ext.x0));
            const double sy = dim == 2 ? std::sin(k * pi * (x.y - ext.y0) / (ext.y1 - ext.y0)) : 1.0;
            return amp * sx * sy;
        });
    } else if (name == "samples") {
        std::string b = detail::trim(body);
        if (b.size() < 2 || b.front() != '[' || b.back() != ']')
            throw ConfigError("samples preset must be written samples:[v0,v1,...]");
        const auto vals = detail::parse_list(std::string_view(b).substr(1, b.size() - 2), preset.substr(0, 32));
        if (vals.size() != grid->num_nodes())
            throw ConfigError("samples preset has " + std::to_string(vals.size()) + " values, grid has " +
                              std::to_string(grid->num_nodes()) + " nodes");
        for (Index k = 0; k < vals.size(); ++k) out[k] = vals[k];
    } else if (name == "random") {
        const auto a = detail::parse_list(body, preset);
        detail::expect_arity(a, 1, preset);
        if (!rng) throw ConfigError("random preset needs a seeded generator");
        out = random_field(grid, *rng, a[0]);
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    if (zero_trace) out.zero_boundary();
    return out;
}

}  // namespace plob::harness
