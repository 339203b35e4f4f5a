#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "dmarket/sampler.hpp"

// The arbiter: runs the iterative training loop against provider oracles,
// enforces the budget B = K*T, maintains the access ledger, and allocates
// revenue proportionally to access counts.

namespace dmarket {

struct MarketConfig {
    int n = 0;             // provider count
    long B = 0;            // total budget in oracle-access units
    int K = 1;             // batch size
    double eta = 0.0;      // OSMD learning rate
    double alpha = 0.0;    // clipping parameter
    std::vector<double> gamma;  // stepsize schedule; size 1 = constant
    std::uint64_t seed = 0;
    int m = 1;             // switch budget for the regret oracle

    long rounds() const { return B / static_cast<long>(K); }  // T
    double gamma_at(long t) const {
        return gamma.size() == 1 ? gamma[0] : gamma[static_cast<std::size_t>(t)];
    }
    void validate() const;
};

struct ModelState {
    std::vector<double> w;
};

class ProviderOracle {
public:
    virtual ~ProviderOracle() = default;
    // Maps a model parameter to an update direction; must be a pure function
    // of (w, rng substream) and preserve the dimension.
    virtual std::vector<double> update(const std::vector<double>& w,
                                       std::mt19937_64& rng) = 0;
};

class UtilityFunction {
public:
    virtual ~UtilityFunction() = default;
    // Range must be contained in [0,1].
    virtual double evaluate(const std::vector<double>& w) const = 0;
};

std::shared_ptr<ProviderOracle> make_oracle(
    std::function<std::vector<double>(const std::vector<double>&, std::mt19937_64&)> fn);

struct AccessLedger {
    std::vector<long> counts;  // N^T(i)
    long total = 0;            // always K*T after a full run
};

struct RoundRecord {
    long round = 0;
    std::vector<double> probs;                    // p^t
    std::vector<int> draws;                       // S^t
    std::vector<std::pair<int, double>> gains;    // observed marginal gains, by index
    double utility = 0.0;                         // U(w^t)
    double test_metric = 0.0;                     // optional external metric
};

struct RunTrace {
    std::vector<RoundRecord> rounds;
    // Filled only in analysis mode: per-round true marginal gains for every
    // provider (row-major T x n) and the realized batch gain per round.
    std::vector<double> full_gains;
    std::vector<double> realized;
};

enum class SamplerKind { osmd, uniform };

struct RunOptions {
    // Analysis mode: query every oracle each round to fill full_gains.
    // These calls are instrumentation and are excluded from the ledger.
    bool record_full_gains = false;
    // Optional per-round metric recorded in the trace (e.g. parameter error).
    std::function<double(const std::vector<double>&)> test_metric;
    // Test hook replacing the categorical draw; same contract as sample_batch.
    std::function<Batch(const SamplerState&, int, std::mt19937_64&)> batch_source;
};

struct MarketResult {
    ModelState model;
    AccessLedger ledger;
    RunTrace trace;
};

MarketResult run_market(const MarketConfig& config,
                        const std::vector<std::shared_ptr<ProviderOracle>>& oracles,
                        const UtilityFunction& utility, const ModelState& w0,
                        SamplerKind sampler_kind, const RunOptions& options = {});

// w' = w + (gamma/K) * sum of the K per-draw updates (duplicates repeated).
ModelState apply_updates(const ModelState& w,
                         const std::vector<std::vector<double>>& updates,
                         double gamma);

// payment_i = total_revenue * counts[i] / total.
std::vector<double> allocate_revenue(const AccessLedger& ledger, double total_revenue);

}  // namespace dmarket
