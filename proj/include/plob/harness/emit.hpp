#pragma once

// Run records and their on-disk form. All numbers are printed with 17
// significant digits so emitted fields round-trip exactly; file names depend
// only on mode and seed.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "plob/harness/config.hpp"
#include "plob/mesh.hpp"

namespace plob::harness {

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct RunRecord {
    Mode mode = Mode::solve;
    std::uint64_t seed = 0;
    json config;
    std::vector<std::pair<std::string, std::string>> metrics;  ///< ordered columns, one row
    std::vector<std::pair<std::string, Field>> fields;
    std::vector<std::pair<std::string, Table>> tables;
    std::optional<json> failure;
    double wall_seconds = 0.0;  ///< reported on the console only, never written

    void metric(std::string name, double v) { metrics.emplace_back(std::move(name), format_real(v)); }
    void metric(std::string name, long v) { metrics.emplace_back(std::move(name), std::to_string(v)); }
    void metric(std::string name, std::string v) { metrics.emplace_back(std::move(name), std::move(v)); }
};

inline std::string file_stem(Mode mode, std::uint64_t seed) {
    return std::string(to_string(mode)) + "_s" + std::to_string(seed);
}

/// "x,value" (1D) or "x,y,value" (2D), one row per node in node order.
inline std::string field_csv(const Field& v) {
    const Grid& g = v.grid();
    std::string out = g.dim() == 1 ? "x,value\n" : "x,y,value\n";
    for (Index k = 0; k < g.num_nodes(); ++k) {
        const Vec2 c = g.coord(k);
        out += format_real(c.x);
        if (g.dim() == 2) out += "," + format_real(c.y);
        out += "," + format_real(v[k]) + "\n";
    }
    return out;
}

inline std::string table_csv(const Table& t) {
    auto join = [](const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
        return s + "\n";
    };
    std::string out = join(t.header);
    for (const auto& r : t.rows) out += join(r);
    return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw OutputError("write failed for '" + path.string() + "'");
}

/// Writes <stem>_<field>.csv, <stem>_<table>.csv, <stem>_metrics.csv,
/// <stem>_config.json and, for failed runs, <stem>_failure.json.
inline void emit(const RunRecord& rec, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw OutputError("cannot create output directory '" + out_dir.string() + "'");
    const std::string stem = file_stem(rec.mode, rec.seed);

    for (const auto& [name, field] : rec.fields) write_file(out_dir / (stem + "_" + name + ".csv"), field_csv(field));
    for (const auto& [name, table] : rec.tables) write_file(out_dir / (stem + "_" + name + ".csv"), table_csv(table));

    Table metrics;
    metrics.rows.emplace_back();
    for (const auto& [k, v] : rec.metrics) {
        metrics.header.push_back(k);
        metrics.rows.back().push_back(v);
    }
    write_file(out_dir / (stem + "_metrics.csv"), table_csv(metrics));
    write_file(out_dir / (stem + "_config.json"), rec.config.dump(2) + "\n");
    if (rec.failure) write_file(out_dir / (stem + "_failure.json"), rec.failure->dump(2) + "\n");
}

/// Reads the value column of a field CSV written by field_csv.
inline std::vector<double> read_field_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw OutputError("cannot read '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    std::vector<double> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        out.push_back(std::stod(line.substr(comma + 1)));
    }
    return out;
}

/// The "samples:[...]" preset reproducing a field exactly.
inline std::string samples_preset(const std::vector<double>& values) {
    std::string s = "samples:[";
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + format_real(values[i]);
    return s + "]";
}

}  // namespace plob::harness
