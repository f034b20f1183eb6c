#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sumprod/synth.hpp"

namespace sumprod {

constexpr int kConfigSchema = 1;

enum class ExperimentKind { nonconc, energy, growth, flatten, decay, sigma, schedule, complex_decay, oracle_suite };

std::string kind_name(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);
// growth, flatten and oracle-suite draw samples and need a seed.
bool is_sampled(ExperimentKind k);

struct ExperimentConfig {
    int schema = kConfigSchema;
    ExperimentKind kind = ExperimentKind::decay;
    MeasureSpec measure;
    std::optional<MeasureSpec> second;  // energy: B, growth: X
    std::vector<double> scales;         // nonconc: rho values
    int directions = 16;                // nonconc
    std::vector<int> ks{1, 2, 3, 4};    // decay, sigma, complex-decay
    std::vector<int> rs{1, 2};          // sigma
    double delta = 0;                   // analysis scale; 0 means 4 grid cells
    double delta1 = 0;                  // flatten; 0 means the grid delta
    bool symmetrize = true;             // flatten: nu = (mu + mu^-)/2
    int samples = 64;
    std::optional<std::uint64_t> seed;
    std::uint64_t pair_cap = 1'000'000;  // energy
    // schedule, as exact rationals
    std::string kappa0 = "1/2";
    std::string eps = "1/100";
    std::string eps2 = "1/10";
    int r = 1;
    int k = 1;
    int chain = 3;
    // oracle-suite
    int instances = 50;
    int max_size = 64;
    int lattice_dim = 1;
    std::string out_dir = ".";
    int threads = 1;
};

// Parses a JSON document; any problem is a config_error naming the field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Canonical JSON of everything that affects output (threads and out_dir excluded).
std::string canonical_config(const ExperimentConfig& cfg);

struct ExperimentResult {
    bool all_pass = true;  // oracle-suite verdict; true for other kinds
    std::vector<std::string> files;
    std::vector<std::string> summary;
};

// Writes <kind>.csv, <kind>.dat where meaningful, and manifest.json into cfg.out_dir.
// `stage` tracks the step in progress so a caller can name it on failure.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::string* stage = nullptr);

}  // namespace sumprod
