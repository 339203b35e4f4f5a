#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dmarket/market.hpp"
#include "dmarket/scenarios.hpp"

// Config-driven experiment runner: builds scenarios, runs the samplers over
// a seed grid, and writes deterministic CSV/JSON artifacts.

namespace dmarket {

struct ScenarioSpec {
    std::string kind = "mixture_regression";  // or "corrupted_classification"
    int n = 40;
    int d = 50;
    int samples_per_provider = 25;
    int groups = 4;
    int consumer_group = 1;
    int holdout_size = 100;
    int n_classes = 3;
    std::vector<double> beta;       // empty -> default tiers
    double tau = 40.0;              // utility squash temperature
    std::string squash = "exp";     // "exp" or "affine"
    std::string oracle = "gradient";  // or "local_sgd"
    double local_lr = 0.1;
    int minibatch = 5;
    int epochs = 1;
};

struct ExperimentConfig {
    ScenarioSpec scenario;
    MarketConfig market;            // seed is overwritten per run
    std::vector<std::string> samplers{"osmd"};
    std::vector<std::uint64_t> seeds;
    std::string out_dir = "out";
    bool regret = false;
    int shapley_perms = -1;         // -1 off, 0 exact, >0 sampled permutations
    double revenue = 1.0;
};

// Concrete market inputs built from a scenario spec and a seed.
struct ScenarioRuntime {
    std::vector<std::shared_ptr<ProviderOracle>> oracles;
    std::shared_ptr<UtilityFunction> utility;
    ModelState w0;
    std::function<double(const std::vector<double>&)> test_metric;
    std::vector<int> group_labels;  // regression only; empty otherwise
};

ScenarioRuntime build_scenario(const ScenarioSpec& spec, std::uint64_t seed);

// Parse + normalize; rejects unknown keys, resolves presets, checks ranges.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig validate_config(const std::string& path);

// Runs every (sampler, seed) job and writes trace CSVs, summary JSONs, and
// per-sampler cross-seed aggregate CSVs under config.out_dir. Returns the
// list of files written.
std::vector<std::string> run_experiment(const ExperimentConfig& config);

// Deterministic float formatting used by every artifact writer.
std::string format_double(double v);

}  // namespace dmarket
