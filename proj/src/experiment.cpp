#include "dmarket/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dmarket/baselines.hpp"
#include "dmarket/regret.hpp"
#include "json.hpp"

namespace dmarket {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ScenarioRuntime build_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    ScenarioRuntime rt;
    if (spec.kind == "mixture_regression") {
        RegressionScenario scenario =
            gen_mixture_regression(spec.n, spec.d, spec.samples_per_provider, spec.groups,
                                   spec.consumer_group, spec.holdout_size, seed);
        rt.group_labels = scenario.group_labels;
        for (auto& dataset : scenario.providers) {
            if (spec.oracle == "gradient") {
                rt.oracles.push_back(gradient_oracle(std::move(dataset)));
            } else if (spec.oracle == "local_sgd") {
                rt.oracles.push_back(local_sgd_oracle(std::move(dataset), spec.local_lr,
                                                      spec.minibatch, spec.epochs));
            } else {
                throw std::invalid_argument("build_scenario: unknown oracle kind '" +
                                            spec.oracle + "'");
            }
        }
        if (spec.squash == "exp") {
            rt.utility = regression_utility(scenario.holdout, spec.tau);
        } else if (spec.squash == "affine") {
            rt.utility = regression_utility_affine(scenario.holdout, spec.tau);
        } else {
            throw std::invalid_argument("build_scenario: unknown squash '" + spec.squash + "'");
        }
        rt.w0.w.assign(static_cast<std::size_t>(spec.d), -1.0);
        std::vector<double> target =
            scenario.true_params[static_cast<std::size_t>(spec.consumer_group - 1)];
        rt.test_metric = [target](const std::vector<double>& w) {
            double s = 0.0;
            for (std::size_t j = 0; j < w.size(); ++j) {
                const double diff = w[j] - target[j];
                s += diff * diff;
            }
            return std::sqrt(s);
        };
    } else if (spec.kind == "corrupted_classification") {
        std::vector<double> beta = spec.beta.empty() ? default_beta_tiers(spec.n) : spec.beta;
        ClassificationScenario scenario =
            gen_corrupted_classification(spec.n, spec.samples_per_provider, spec.d,
                                         spec.n_classes, beta, spec.holdout_size, seed);
        for (auto& dataset : scenario.providers)
            rt.oracles.push_back(softmax_gradient_oracle(std::move(dataset), spec.n_classes));
        rt.utility = classification_utility(scenario.holdout, spec.n_classes, spec.tau);
        rt.w0.w.assign(static_cast<std::size_t>(spec.n_classes) *
                           static_cast<std::size_t>(spec.d),
                       0.0);
        ClassDataset holdout = scenario.holdout;
        const int n_classes = spec.n_classes;
        rt.test_metric = [holdout, n_classes](const std::vector<double>& w) {
            // hold-out accuracy
            const std::size_t d = holdout.x.empty() ? 0 : holdout.x[0].size();
            std::size_t correct = 0;
            for (std::size_t r = 0; r < holdout.size(); ++r) {
                int argmax = 0;
                double best = -1e300;
                for (int c = 0; c < n_classes; ++c) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < d; ++j)
                        dot += w[static_cast<std::size_t>(c) * d + j] * holdout.x[r][j];
                    if (dot > best) {
                        best = dot;
                        argmax = c;
                    }
                }
                if (argmax == holdout.labels[r]) ++correct;
            }
            return static_cast<double>(correct) / static_cast<double>(holdout.size());
        };
    } else {
        throw std::invalid_argument("build_scenario: unknown scenario kind '" + spec.kind + "'");
    }
    return rt;
}

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

void apply_preset(const std::string& name, ExperimentConfig& cfg) {
    if (name == "paper-mixture-a2") {
        cfg.scenario.kind = "mixture_regression";
        cfg.scenario.n = 100;
        cfg.scenario.d = 1000;
        cfg.scenario.samples_per_provider = 400;
        cfg.scenario.groups = 4;
        cfg.scenario.consumer_group = 1;
        cfg.scenario.holdout_size = 1000;
        cfg.scenario.oracle = "gradient";
        cfg.market.gamma = {0.01};
        cfg.market.alpha = 0.01;
        cfg.market.eta = 0.001;
        cfg.market.K = cfg.scenario.n / 10;
        cfg.market.B = 1500L * cfg.market.K;  // T = 1500
    } else if (name == "paper-classification-a1") {
        cfg.scenario.kind = "corrupted_classification";
        cfg.scenario.n = 100;
        cfg.scenario.samples_per_provider = 400;
        cfg.scenario.holdout_size = 1000;
        cfg.scenario.oracle = "local_sgd";
        cfg.market.gamma = {0.1};
        cfg.market.alpha = 0.01;
        cfg.market.eta = 1.0;
        cfg.market.K = cfg.scenario.n / 10;
        cfg.market.B = 500L * cfg.market.K;  // T = 500
    } else if (name == "desk-mixture") {
        cfg.scenario.kind = "mixture_regression";
        cfg.scenario.n = 40;
        cfg.scenario.d = 50;
        cfg.scenario.samples_per_provider = 25;
        cfg.scenario.groups = 4;
        cfg.scenario.consumer_group = 1;
        cfg.scenario.holdout_size = 100;
        cfg.scenario.tau = 40.0;
        cfg.market.gamma = {0.01};
        cfg.market.alpha = 0.01;
        cfg.market.eta = 2.0;
        cfg.market.K = 4;
        cfg.market.B = 6000;
    } else if (name == "desk-classification") {
        cfg.scenario.kind = "corrupted_classification";
        cfg.scenario.n = 40;
        cfg.scenario.d = 10;
        cfg.scenario.samples_per_provider = 30;
        cfg.scenario.n_classes = 3;
        cfg.scenario.holdout_size = 120;
        cfg.scenario.tau = 1.0;
        cfg.market.gamma = {0.1};
        cfg.market.alpha = 0.01;
        cfg.market.eta = 2.0;
        cfg.market.K = 4;
        cfg.market.B = 1600;
    } else {
        throw std::invalid_argument("config: unknown preset '" + name + "'");
    }
}

void parse_scenario(const json& j, ScenarioSpec& s) {
    reject_unknown_keys(j,
                        {"kind", "n", "d", "samples_per_provider", "groups",
                         "consumer_group", "holdout_size", "n_classes", "beta", "tau",
                         "squash", "oracle", "local_lr", "minibatch", "epochs"},
                        "scenario");
    if (j.contains("kind")) s.kind = j["kind"].get<std::string>();
    if (j.contains("n")) s.n = j["n"].get<int>();
    if (j.contains("d")) s.d = j["d"].get<int>();
    if (j.contains("samples_per_provider"))
        s.samples_per_provider = j["samples_per_provider"].get<int>();
    if (j.contains("groups")) s.groups = j["groups"].get<int>();
    if (j.contains("consumer_group")) s.consumer_group = j["consumer_group"].get<int>();
    if (j.contains("holdout_size")) s.holdout_size = j["holdout_size"].get<int>();
    if (j.contains("n_classes")) s.n_classes = j["n_classes"].get<int>();
    if (j.contains("beta")) s.beta = j["beta"].get<std::vector<double>>();
    if (j.contains("tau")) s.tau = j["tau"].get<double>();
    if (j.contains("squash")) s.squash = j["squash"].get<std::string>();
    if (j.contains("oracle")) s.oracle = j["oracle"].get<std::string>();
    if (j.contains("local_lr")) s.local_lr = j["local_lr"].get<double>();
    if (j.contains("minibatch")) s.minibatch = j["minibatch"].get<int>();
    if (j.contains("epochs")) s.epochs = j["epochs"].get<int>();
}

void parse_market(const json& j, ExperimentConfig& cfg) {
    reject_unknown_keys(j, {"B", "K", "T", "eta", "alpha", "gamma", "m"}, "market");
    if (j.contains("K")) cfg.market.K = j["K"].get<int>();
    if (j.contains("B")) cfg.market.B = j["B"].get<long>();
    if (j.contains("T")) {
        if (j.contains("B"))
            throw std::invalid_argument("config: give either market.B or market.T, not both");
        cfg.market.B = j["T"].get<long>() * static_cast<long>(cfg.market.K);
    }
    if (j.contains("eta")) cfg.market.eta = j["eta"].get<double>();
    if (j.contains("alpha")) cfg.market.alpha = j["alpha"].get<double>();
    if (j.contains("gamma")) {
        if (j["gamma"].is_array())
            cfg.market.gamma = j["gamma"].get<std::vector<double>>();
        else
            cfg.market.gamma = {j["gamma"].get<double>()};
    }
    if (j.contains("m")) cfg.market.m = j["m"].get<int>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    reject_unknown_keys(j,
                        {"preset", "scenario", "market", "samplers", "seeds", "out_dir",
                         "regret", "shapley_perms", "revenue"},
                        "top level");

    ExperimentConfig cfg;
    cfg.market.gamma = {0.01};
    cfg.market.eta = 1.0;
    cfg.market.alpha = 0.01;
    cfg.market.K = 1;
    cfg.market.B = 0;

    if (j.contains("preset")) apply_preset(j["preset"].get<std::string>(), cfg);
    if (j.contains("scenario")) parse_scenario(j["scenario"], cfg.scenario);
    if (j.contains("market")) parse_market(j["market"], cfg);
    if (j.contains("samplers")) cfg.samplers = j["samplers"].get<std::vector<std::string>>();
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("regret")) cfg.regret = j["regret"].get<bool>();
    if (j.contains("shapley_perms")) cfg.shapley_perms = j["shapley_perms"].get<int>();
    if (j.contains("revenue")) cfg.revenue = j["revenue"].get<double>();

    if (cfg.seeds.empty()) throw std::invalid_argument("config: seed list must be nonempty");
    if (cfg.samplers.empty()) throw std::invalid_argument("config: sampler list must be nonempty");
    for (const auto& s : cfg.samplers)
        if (s != "osmd" && s != "uniform")
            throw std::invalid_argument("config: unknown sampler '" + s + "'");
    if (cfg.shapley_perms < -1)
        throw std::invalid_argument("config: shapley_perms must be >= -1");
    if (!(cfg.revenue > 0.0)) throw std::invalid_argument("config: revenue must be > 0");
    cfg.market.n = cfg.scenario.n;
    cfg.market.validate();  // range diagnostics before any compute
    return cfg;
}

ExperimentConfig validate_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {

// Write to a temp file first; a partial run never replaces a completed file.
void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string trace_csv(const MarketResult& result, int n) {
    std::ostringstream out;
    out << "# trace-schema v1\n";
    out << "round,utility,test_metric";
    for (int i = 0; i < n; ++i) out << ",p_" << i;
    for (int i = 0; i < n; ++i) out << ",N_" << i;
    out << "\n";
    std::vector<long> counts(static_cast<std::size_t>(n), 0);
    for (const auto& rec : result.trace.rounds) {
        for (int i : rec.draws) ++counts[static_cast<std::size_t>(i)];
        out << rec.round << ',' << format_double(rec.utility) << ','
            << format_double(rec.test_metric);
        for (int i = 0; i < n; ++i)
            out << ',' << format_double(rec.probs[static_cast<std::size_t>(i)]);
        for (int i = 0; i < n; ++i) out << ',' << counts[static_cast<std::size_t>(i)];
        out << "\n";
    }
    return out.str();
}

json summary_json(const ExperimentConfig& cfg, const std::string& sampler,
                  std::uint64_t seed, const MarketResult& result,
                  const ScenarioRuntime& rt) {
    json j;
    j["schema"] = "summary-v1";
    j["sampler"] = sampler;
    j["seed"] = seed;
    j["rounds"] = cfg.market.rounds();
    j["final_utility"] = rt.utility->evaluate(result.model.w);
    j["final_test_metric"] =
        rt.test_metric ? rt.test_metric(result.model.w) : 0.0;
    j["ledger"] = {{"counts", result.ledger.counts}, {"total", result.ledger.total}};
    j["payments"] = allocate_revenue(result.ledger, cfg.revenue);
    if (!rt.group_labels.empty()) j["group_labels"] = rt.group_labels;

    if (cfg.regret) {
        UtilityTrace trace;
        trace.T = static_cast<std::size_t>(cfg.market.rounds());
        trace.n = static_cast<std::size_t>(cfg.market.n);
        trace.gains = result.trace.full_gains;
        trace.realized = result.trace.realized;
        const RegretReport report =
            compute_regret(trace, cfg.market.m, cfg.market.K, cfg.market.alpha,
                           cfg.market.eta, cfg.market.n, cfg.market.B);
        j["regret"] = {{"oracle_value", report.oracle_value},
                       {"realized_total", report.realized_total},
                       {"regret", report.regret},
                       {"bound", report.bound},
                       {"avg_regret", report.avg_regret}};
    }
    return j;
}

std::string aggregate_csv(const std::vector<MarketResult>& runs) {
    std::ostringstream out;
    out << "# aggregate-schema v1\n";
    out << "round,utility_mean,utility_std,test_metric_mean,test_metric_std\n";
    if (runs.empty()) return out.str();
    const std::size_t T = runs[0].trace.rounds.size();
    const double k = static_cast<double>(runs.size());
    for (std::size_t t = 0; t < T; ++t) {
        double um = 0.0, mm = 0.0;
        for (const auto& r : runs) {
            um += r.trace.rounds[t].utility;
            mm += r.trace.rounds[t].test_metric;
        }
        um /= k;
        mm /= k;
        double uv = 0.0, mv = 0.0;
        for (const auto& r : runs) {
            uv += (r.trace.rounds[t].utility - um) * (r.trace.rounds[t].utility - um);
            mv += (r.trace.rounds[t].test_metric - mm) * (r.trace.rounds[t].test_metric - mm);
        }
        out << t << ',' << format_double(um) << ',' << format_double(std::sqrt(uv / k))
            << ',' << format_double(mm) << ',' << format_double(std::sqrt(mv / k)) << "\n";
    }
    return out.str();
}

}  // namespace

std::vector<std::string> run_experiment(const ExperimentConfig& config) {
    fs::create_directories(config.out_dir);
    std::vector<std::string> written;

    for (const std::string& sampler_name : config.samplers) {
        const SamplerKind kind =
            sampler_name == "osmd" ? SamplerKind::osmd : SamplerKind::uniform;
        std::vector<MarketResult> runs;
        runs.reserve(config.seeds.size());

        for (std::uint64_t seed : config.seeds) {
            ScenarioRuntime rt = build_scenario(config.scenario, seed);
            MarketConfig market = config.market;
            market.seed = seed;
            RunOptions options;
            options.record_full_gains = config.regret;
            options.test_metric = rt.test_metric;
            MarketResult result =
                run_market(market, rt.oracles, *rt.utility, rt.w0, kind, options);

            json summary = summary_json(config, sampler_name, seed, result, rt);
            if (config.shapley_perms >= 0) {
                const ShapleyReport report = accumulate_shapley(
                    market, rt.oracles, *rt.utility, rt.w0, config.shapley_perms);
                bool degenerate = false;
                const std::vector<double> payments =
                    shapley_revenue(report.values, config.revenue, &degenerate);
                summary["shapley"] = {{"values", report.values},
                                      {"rounds_used", report.rounds_used},
                                      {"permutations_per_round", report.permutations_per_round},
                                      {"payments", payments},
                                      {"degenerate_fallback_uniform", degenerate}};
            }

            const fs::path trace_path =
                fs::path(config.out_dir) /
                ("trace_" + sampler_name + "_seed" + std::to_string(seed) + ".csv");
            const fs::path summary_path =
                fs::path(config.out_dir) /
                ("summary_" + sampler_name + "_seed" + std::to_string(seed) + ".json");
            atomic_write(trace_path, trace_csv(result, config.market.n));
            atomic_write(summary_path, summary.dump(2) + "\n");
            written.push_back(trace_path.string());
            written.push_back(summary_path.string());
            runs.push_back(std::move(result));
        }

        const fs::path agg_path =
            fs::path(config.out_dir) / ("aggregate_" + sampler_name + ".csv");
        atomic_write(agg_path, aggregate_csv(runs));
        written.push_back(agg_path.string());
    }
    return written;
}

}  // namespace dmarket
