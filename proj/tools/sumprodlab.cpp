#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sumprod/experiment.hpp"

namespace {

enum Exit { ok = 0, computation = 1, config = 2, budget = 3 };

void apply_budget_env() {
    const char* env = std::getenv("SUMPRODLAB_BUDGET");
    if (!env || !*env) return;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || v == 0) throw sumprod::config_error(std::string("SUMPRODLAB_BUDGET must be a positive integer, got '") + env + "'");
    sumprod::set_cell_budget(v);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discretized sum-product experiments"};
    std::string experiment, config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("experiment", experiment,
                   "nonconc | energy | growth | flatten | decay | sigma | schedule | complex-decay | oracle-suite")
        ->required();
    app.add_option("--config", config_path, "JSON experiment config")->required();
    auto* out_opt = app.add_option("--out", out_dir, "output directory (default: config 'out' or .)");
    auto* seed_opt = app.add_option("--seed", seed, "seed, overrides the config");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Exit::ok : Exit::config;
    }

    std::string stage = "config";
    try {
        apply_budget_env();
        auto cfg = sumprod::load_config(config_path);
        if (sumprod::parse_kind(experiment) != cfg.kind)
            throw sumprod::config_error("command asks for '" + experiment + "' but the config describes '" +
                                        sumprod::kind_name(cfg.kind) + "'");
        if (*out_opt) cfg.out_dir = out_dir;
        if (*seed_opt) cfg.seed = seed;
        if (threads > 0) cfg.threads = threads;
        auto res = sumprod::run_experiment(cfg, &stage);
        for (const auto& line : res.summary) std::cout << line << "\n";
        for (const auto& f : res.files) std::cout << "wrote " << f << "\n";
        return res.all_pass ? Exit::ok : Exit::computation;
    } catch (const sumprod::config_error& e) {
        std::cerr << "sumprodlab: config error (" << stage << "): " << e.what() << "\n";
        return Exit::config;
    } catch (const sumprod::budget_error& e) {
        std::cerr << "sumprodlab: budget exceeded (" << stage << "): " << e.what()
                  << "; raise SUMPRODLAB_BUDGET or lower m\n";
        return Exit::budget;
    } catch (const std::exception& e) {
        std::cerr << "sumprodlab: " << stage << " failed: " << e.what() << "\n";
        return Exit::computation;
    }
}
