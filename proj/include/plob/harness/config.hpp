#pragma once

// Experiment configuration: a strict JSON schema (unknown and duplicate keys are
// errors) mapped onto ExperimentConfig. See README.md for the schema.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plob/errors.hpp"
#include "plob/mesh.hpp"

namespace plob::harness {

using json = nlohmann::json;

enum class Mode { solve, penalize, control, verify };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::solve: return "solve";
        case Mode::penalize: return "penalize";
        case Mode::control: return "control";
        case Mode::verify: return "verify";
    }
    return "?";
}

inline Mode parse_mode(const std::string& s) {
    if (s == "solve") return Mode::solve;
    if (s == "penalize") return Mode::penalize;
    if (s == "control") return Mode::control;
    if (s == "verify") return Mode::verify;
    throw ConfigError("mode: unknown mode '" + s + "'");
}

struct ExperimentConfig {
    Mode mode = Mode::solve;
    int dim = 1;
    Index n = 64;
    Extents extents{};
    double p = 2.0;
    std::optional<double> epsilon;
    std::optional<std::string> f, psi, z;
    std::vector<double> deltas;  ///< empty: geometric 1e-1 ... 1e-6

    double tol_pg = 1e-11;
    long max_iters = 400000;
    double outer_tol = 1e-9;
    long max_outer_iters = 2000;

    std::optional<std::string> initial_control;
    int probes = 50;
    double fd_step = 1e-6;
    unsigned threads = 1;

    int instances = 5;

    std::uint64_t seed = 0;
    std::string output_dir = "out";

    /// Effective configuration, every field spelled out. Keys are sorted, so the
    /// dump is deterministic.
    json to_json() const {
        json j;
        j["mode"] = to_string(mode);
        j["grid"] = {{"dim", dim}, {"n", n}};
        if (dim == 1)
            j["grid"]["extents"] = {extents.x0, extents.x1};
        else
            j["grid"]["extents"] = {extents.x0, extents.x1, extents.y0, extents.y1};
        j["p"] = p;
        if (epsilon) j["epsilon"] = *epsilon;
        if (f) j["f"] = *f;
        if (psi) j["psi"] = *psi;
        if (z) j["z"] = *z;
        if (!deltas.empty()) j["deltas"] = deltas;
        j["tolerances"] = {{"pg", tol_pg}, {"max_iters", max_iters}, {"outer", outer_tol},
                           {"max_outer_iters", max_outer_iters}};
        j["control"] = {{"probes", probes}, {"fd_step", fd_step}, {"threads", threads}};
        if (initial_control) j["control"]["initial"] = *initial_control;
        j["verify"] = {{"instances", instances}};
        j["seed"] = seed;
        j["output_dir"] = output_dir;
        return j;
    }
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw ConfigError((where.empty() ? key : where + "." + key) + ": unknown key");
}

inline const json& require_object(const json& j, const std::string& name) {
    if (!j.is_object()) throw ConfigError(name + ": expected an object");
    return j;
}

inline double get_number(const json& j, const std::string& name) {
    if (!j.is_number()) throw ConfigError(name + ": expected a number");
    return j.get<double>();
}

inline long get_integer(const json& j, const std::string& name) {
    if (!j.is_number_integer()) throw ConfigError(name + ": expected an integer");
    return j.get<long>();
}

inline std::string get_string(const json& j, const std::string& name) {
    if (!j.is_string()) throw ConfigError(name + ": expected a string");
    return j.get<std::string>();
}

/// Line number of a byte offset, for parse diagnostics.
inline std::size_t line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace detail

/// Parses JSON text; duplicate keys are parse errors.
inline json parse_json_strict(const std::string& text) {
    std::vector<std::set<std::string>> scopes;
    auto on_event = [&](int, json::parse_event_t event, json& parsed) {
        switch (event) {
            case json::parse_event_t::object_start: scopes.emplace_back(); break;
            case json::parse_event_t::object_end: scopes.pop_back(); break;
            case json::parse_event_t::key: {
                const auto key = parsed.get<std::string>();
                if (!scopes.back().insert(key).second) throw ConfigError("parse error: duplicate key '" + key + "'");
                break;
            }
            default: break;
        }
        return true;
    };
    try {
        return json::parse(text, on_event);
    } catch (const json::parse_error& e) {
        throw ConfigError("parse error at line " + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
    }
}

/// Validates the mode-dependent required fields.
inline void validate(const ExperimentConfig& c) {
    if (c.dim != 1 && c.dim != 2) throw ConfigError("grid.dim: must be 1 or 2");
    if (c.n < 1) throw ConfigError("grid.n: must be >= 1");
    if (!(c.p > 1.0)) throw ConfigError("p: must be > 1");
    if (c.epsilon && !(*c.epsilon >= 0.0)) throw ConfigError("epsilon: must be >= 0");
    if (!(c.tol_pg > 0.0)) throw ConfigError("tolerances.pg: must be > 0");
    if (c.max_iters <= 0) throw ConfigError("tolerances.max_iters: must be > 0");
    if (!(c.outer_tol > 0.0)) throw ConfigError("tolerances.outer: must be > 0");
    if (c.max_outer_iters <= 0) throw ConfigError("tolerances.max_outer_iters: must be > 0");
    if (c.probes < 0) throw ConfigError("control.probes: must be >= 0");
    if (!(c.fd_step > 0.0)) throw ConfigError("control.fd_step: must be > 0");
    if (c.instances < 1) throw ConfigError("verify.instances: must be >= 1");
    for (std::size_t i = 0; i < c.deltas.size(); ++i) {
        if (!(c.deltas[i] > 0.0)) throw ConfigError("deltas: entries must be > 0");
        if (i > 0 && !(c.deltas[i] < c.deltas[i - 1])) throw ConfigError("deltas: must be strictly decreasing");
    }
    auto need = [](const std::optional<std::string>& v, const char* name) {
        if (!v) throw ConfigError(std::string(name) + ": required in this mode");
    };
    switch (c.mode) {
        case Mode::solve:
        case Mode::penalize:
            need(c.f, "f");
            need(c.psi, "psi");
            break;
        case Mode::control:
            need(c.f, "f");
            need(c.z, "z");
            break;
        case Mode::verify: break;
    }
}

inline ExperimentConfig config_from_json(const json& root) {
    using namespace detail;
    require_object(root, "config");
    reject_unknown(root, "", {"mode", "grid", "p", "epsilon", "f", "psi", "z", "deltas", "tolerances",
                              "control", "verify", "seed", "output_dir"});
    ExperimentConfig c;
    if (!root.contains("mode")) throw ConfigError("mode: required");
    c.mode = parse_mode(get_string(root["mode"], "mode"));

    if (!root.contains("grid")) throw ConfigError("grid: required");
    const json& g = require_object(root["grid"], "grid");
    reject_unknown(g, "grid", {"dim", "n", "extents"});
    if (!g.contains("dim")) throw ConfigError("grid.dim: required");
    if (!g.contains("n")) throw ConfigError("grid.n: required");
    c.dim = static_cast<int>(get_integer(g["dim"], "grid.dim"));
    const long n = get_integer(g["n"], "grid.n");
    if (n < 1) throw ConfigError("grid.n: must be >= 1");
    c.n = static_cast<Index>(n);
    if (g.contains("extents")) {
        const json& e = g["extents"];
        if (!e.is_array() || e.size() != static_cast<std::size_t>(2 * c.dim))
            throw ConfigError("grid.extents: expected " + std::to_string(2 * c.dim) + " numbers");
        c.extents.x0 = get_number(e[0], "grid.extents");
        c.extents.x1 = get_number(e[1], "grid.extents");
        if (c.dim == 2) {
            c.extents.y0 = get_number(e[2], "grid.extents");
            c.extents.y1 = get_number(e[3], "grid.extents");
        }
    }

    if (!root.contains("p")) throw ConfigError("p: required");
    c.p = get_number(root["p"], "p");
    if (root.contains("epsilon")) c.epsilon = get_number(root["epsilon"], "epsilon");
    if (root.contains("f")) c.f = get_string(root["f"], "f");
    if (root.contains("psi")) c.psi = get_string(root["psi"], "psi");
    if (root.contains("z")) c.z = get_string(root["z"], "z");
    if (root.contains("deltas")) {
        if (!root["deltas"].is_array()) throw ConfigError("deltas: expected an array");
        for (const auto& d : root["deltas"]) c.deltas.push_back(get_number(d, "deltas"));
    }
    if (root.contains("tolerances")) {
        const json& t = require_object(root["tolerances"], "tolerances");
        reject_unknown(t, "tolerances", {"pg", "max_iters", "outer", "max_outer_iters"});
        if (t.contains("pg")) c.tol_pg = get_number(t["pg"], "tolerances.pg");
        if (t.contains("max_iters")) c.max_iters = get_integer(t["max_iters"], "tolerances.max_iters");
        if (t.contains("outer")) c.outer_tol = get_number(t["outer"], "tolerances.outer");
        if (t.contains("max_outer_iters"))
            c.max_outer_iters = get_integer(t["max_outer_iters"], "tolerances.max_outer_iters");
    }
    if (root.contains("control")) {
        const json& t = require_object(root["control"], "control");
        reject_unknown(t, "control", {"initial", "probes", "fd_step", "threads"});
        if (t.contains("initial")) c.initial_control = get_string(t["initial"], "control.initial");
        if (t.contains("probes")) c.probes = static_cast<int>(get_integer(t["probes"], "control.probes"));
        if (t.contains("fd_step")) c.fd_step = get_number(t["fd_step"], "control.fd_step");
        if (t.contains("threads")) {
            const long th = get_integer(t["threads"], "control.threads");
            if (th < 0) throw ConfigError("control.threads: must be >= 0");
            c.threads = static_cast<unsigned>(th);
        }
    }
    if (root.contains("verify")) {
        const json& t = require_object(root["verify"], "verify");
        reject_unknown(t, "verify", {"instances"});
        if (t.contains("instances")) c.instances = static_cast<int>(get_integer(t["instances"], "verify.instances"));
    }
    if (root.contains("seed")) {
        const json& s = root["seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            throw ConfigError("seed: expected a nonnegative integer");
        c.seed = s.get<std::uint64_t>();
    }
    if (root.contains("output_dir")) c.output_dir = get_string(root["output_dir"], "output_dir");
    validate(c);
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) { return config_from_json(parse_json_strict(text)); }

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace plob::harness
