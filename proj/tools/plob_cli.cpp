#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "plob/harness/config.hpp"
#include "plob/harness/emit.hpp"
#include "plob/harness/run.hpp"

namespace h = plob::harness;

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    long grid_n = 0;
    double p = 0.0;
};

int execute(h::Mode mode, const Overrides& o, const CLI::App& sub) {
    h::ExperimentConfig cfg;
    try {
        cfg = h::load_config(o.config);
        cfg.mode = mode;
        if (sub.count("--seed")) cfg.seed = o.seed;
        if (sub.count("--grid-n")) {
            if (o.grid_n < 1) throw plob::ConfigError("--grid-n: must be >= 1");
            cfg.n = static_cast<plob::Index>(o.grid_n);
        }
        if (sub.count("--p")) cfg.p = o.p;
        if (sub.count("--out")) cfg.output_dir = o.out;
        h::validate(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return h::kConfigFailure;
    }

    h::RunRecord rec;
    try {
        rec = h::run(cfg);
    } catch (const plob::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return h::kConfigFailure;
    }
    try {
        h::emit(rec, cfg.output_dir);
    } catch (const h::OutputError& e) {
        std::fprintf(stderr, "output error: %s\n", e.what());
        return h::kOutputFailure;
    }
    const int code = h::exit_code(rec);
    std::fprintf(stderr, "%s seed=%llu: %s in %.3f s -> %s\n", h::to_string(mode),
                 static_cast<unsigned long long>(cfg.seed), code == h::kOk ? "ok" : "FAILED", rec.wall_seconds,
                 cfg.output_dir.c_str());
    if (rec.failure) std::fprintf(stderr, "%s\n", rec.failure->dump().c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"p-Laplacian obstacle problems: solve, penalize, control, verify"};
    app.require_subcommand(1);

    Overrides o;
    const std::pair<const char*, h::Mode> modes[] = {{"solve", h::Mode::solve},
                                                     {"penalize", h::Mode::penalize},
                                                     {"control", h::Mode::control},
                                                     {"verify", h::Mode::verify}};
    std::vector<std::pair<CLI::App*, h::Mode>> subs;
    for (const auto& [name, mode] : modes) {
        CLI::App* sub = app.add_subcommand(name, std::string("run in ") + name + " mode");
        sub->add_option("--config", o.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory (overrides output_dir)");
        sub->add_option("--seed", o.seed, "random seed (overrides seed)");
        sub->add_option("--grid-n", o.grid_n, "interior nodes per axis (overrides grid.n)");
        sub->add_option("--p", o.p, "exponent p > 1 (overrides p)");
        subs.emplace_back(sub, mode);
    }
    CLI11_PARSE(app, argc, argv);

    for (const auto& [sub, mode] : subs)
        if (sub->parsed()) return execute(mode, o, *sub);
    return h::kConfigFailure;
}
