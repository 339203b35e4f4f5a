#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dmarket/experiment.hpp"
#include "json.hpp"

// Experiment CLI. Output root resolution: --out flag, else DMARKET_OUT env
// var, else the config's out_dir. Errors go to stderr as a JSON object.

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string tok = csv.substr(pos, comma == std::string::npos ? csv.npos : comma - pos);
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-market simulation experiment runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds_csv, sampler;
    bool regret = false;
    int shapley = -2;  // -2 = not given on the command line

    auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
    run->add_option("config", config_path, "Path to the experiment config")->required();
    run->add_option("--out", out_dir, "Output directory (overrides config and DMARKET_OUT)");
    run->add_option("--seeds", seeds_csv, "Comma-separated seed list override");
    run->add_option("--sampler", sampler, "Restrict to one sampler (osmd|uniform)");
    run->add_flag("--regret", regret, "Enable regret instrumentation");
    run->add_option("--shapley", shapley, "Shapley baseline: 0 exact, N sampled permutations");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Parse and check a config, then exit");
    validate->add_option("config", validate_path, "Path to the experiment config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            dmarket::validate_config(validate_path);
            std::cout << "ok\n";
            return 0;
        }

        dmarket::ExperimentConfig config = dmarket::validate_config(config_path);
        if (!out_dir.empty()) {
            config.out_dir = out_dir;
        } else if (const char* env = std::getenv("DMARKET_OUT")) {
            config.out_dir = std::string(env) + "/" + config.out_dir;
        }
        if (!seeds_csv.empty()) config.seeds = parse_seed_list(seeds_csv);
        if (!sampler.empty()) {
            if (sampler != "osmd" && sampler != "uniform")
                throw std::invalid_argument("--sampler must be osmd or uniform");
            config.samplers = {sampler};
        }
        if (regret) config.regret = true;
        if (shapley >= -1) config.shapley_perms = shapley;
        if (config.seeds.empty())
            throw std::invalid_argument("config: seed list must be nonempty");

        const auto files = dmarket::run_experiment(config);
        for (const auto& f : files) std::cout << f << "\n";
        return 0;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
