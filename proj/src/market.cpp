#include "dmarket/market.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "dmarket/rng.hpp"

namespace dmarket {

void MarketConfig::validate() const {
    if (n < 1) throw std::invalid_argument("MarketConfig: n must be >= 1");
    if (K < 1 || B < K) throw std::invalid_argument("MarketConfig: need B >= K >= 1");
    if (rounds() < 1) throw std::invalid_argument("MarketConfig: T = floor(B/K) must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("MarketConfig: alpha must be in [0,1]");
    if (!(eta > 0.0)) throw std::invalid_argument("MarketConfig: eta must be > 0");
    if (gamma.empty() ||
        (gamma.size() != 1 && gamma.size() != static_cast<std::size_t>(rounds())))
        throw std::invalid_argument("MarketConfig: gamma must have size 1 or T");
    for (double g : gamma)
        if (!(g > 0.0)) throw std::invalid_argument("MarketConfig: gamma entries must be > 0");
    if (m < 1 || m > rounds())
        throw std::invalid_argument("MarketConfig: m must be in [1, T]");
}

namespace {

class FunctionOracle final : public ProviderOracle {
public:
    explicit FunctionOracle(
        std::function<std::vector<double>(const std::vector<double>&, std::mt19937_64&)> fn)
        : fn_(std::move(fn)) {}
    std::vector<double> update(const std::vector<double>& w, std::mt19937_64& rng) override {
        return fn_(w, rng);
    }

private:
    std::function<std::vector<double>(const std::vector<double>&, std::mt19937_64&)> fn_;
};

double checked_utility(const UtilityFunction& utility, const std::vector<double>& w,
                       long round) {
    const double u = utility.evaluate(w);
    if (!(u >= -1e-9 && u <= 1.0 + 1e-9))
        throw std::runtime_error("run_market: utility outside [0,1] at round " +
                                 std::to_string(round));
    return u;
}

void check_finite(const std::vector<double>& w, long round) {
    for (double x : w)
        if (!std::isfinite(x))
            throw std::runtime_error("run_market: non-finite model parameter at round " +
                                     std::to_string(round));
}

}  // namespace

std::shared_ptr<ProviderOracle> make_oracle(
    std::function<std::vector<double>(const std::vector<double>&, std::mt19937_64&)> fn) {
    return std::make_shared<FunctionOracle>(std::move(fn));
}

ModelState apply_updates(const ModelState& w,
                         const std::vector<std::vector<double>>& updates,
                         double gamma) {
    if (updates.empty()) throw std::invalid_argument("apply_updates: no updates");
    ModelState out = w;
    const double scale = gamma / static_cast<double>(updates.size());
    for (const auto& g : updates) {
        if (g.size() != w.w.size())
            throw std::invalid_argument("apply_updates: update dimension mismatch");
        for (std::size_t j = 0; j < g.size(); ++j) out.w[j] += scale * g[j];
    }
    return out;
}

std::vector<double> allocate_revenue(const AccessLedger& ledger, double total_revenue) {
    if (ledger.total <= 0) throw std::invalid_argument("allocate_revenue: zero total accesses");
    if (!(total_revenue > 0.0))
        throw std::invalid_argument("allocate_revenue: revenue must be > 0");
    std::vector<double> payments(ledger.counts.size());
    for (std::size_t i = 0; i < payments.size(); ++i)
        payments[i] = total_revenue * static_cast<double>(ledger.counts[i]) /
                      static_cast<double>(ledger.total);
    return payments;
}

MarketResult run_market(const MarketConfig& config,
                        const std::vector<std::shared_ptr<ProviderOracle>>& oracles,
                        const UtilityFunction& utility, const ModelState& w0,
                        SamplerKind sampler_kind, const RunOptions& options) {
    config.validate();
    if (oracles.size() != static_cast<std::size_t>(config.n))
        throw std::invalid_argument("run_market: expected n oracles");

    const long T = config.rounds();
    const std::size_t n = static_cast<std::size_t>(config.n);
    const int K = config.K;

    MarketResult result;
    result.model = w0;
    result.ledger.counts.assign(n, 0);
    result.ledger.total = 0;
    result.trace.rounds.reserve(static_cast<std::size_t>(T));
    if (options.record_full_gains) {
        result.trace.full_gains.assign(static_cast<std::size_t>(T) * n, 0.0);
        result.trace.realized.assign(static_cast<std::size_t>(T), 0.0);
    }

    SamplerState sampler;
    sampler.dist = Distribution::uniform(n, config.alpha);
    sampler.round = 0;
    sampler.eta = config.eta;

    for (long t = 0; t < T; ++t) {
        check_finite(result.model.w, t);
        const double gamma_t = config.gamma_at(t);
        const double u_base = checked_utility(utility, result.model.w, t);

        auto sampling_rng = substream(config.seed, Stream::sampling,
                                      static_cast<std::uint64_t>(t));
        const Batch batch = options.batch_source
                                ? options.batch_source(sampler, K, sampling_rng)
                                : sample_batch(sampler, K, sampling_rng);

        // Charge one budget unit per draw; duplicates pay again even though
        // the oracle is evaluated once per distinct provider.
        for (int i : batch.draws) {
            ++result.ledger.counts[static_cast<std::size_t>(i)];
            ++result.ledger.total;
        }

        // Broadcast w^t to the sampled providers; collect one update per
        // distinct index. In analysis mode, every oracle is probed (off the
        // ledger) to fill the full gains matrix.
        std::map<int, std::vector<double>> updates;
        std::unordered_map<int, double> gains;
        auto probe = [&](int i) -> const std::vector<double>& {
            auto it = updates.find(i);
            if (it != updates.end()) return it->second;
            auto oracle_rng = substream(config.seed, Stream::oracle,
                                        static_cast<std::uint64_t>(t),
                                        static_cast<std::uint64_t>(i));
            std::vector<double> g =
                oracles[static_cast<std::size_t>(i)]->update(result.model.w, oracle_rng);
            if (g.size() != result.model.w.size())
                throw std::runtime_error(
                    "run_market: oracle output dimension mismatch for provider " +
                    std::to_string(i));
            it = updates.emplace(i, std::move(g)).first;
            return it->second;
        };
        auto marginal_gain = [&](int i) {
            const std::vector<double>& g = probe(i);
            std::vector<double> probe_w = result.model.w;
            for (std::size_t j = 0; j < probe_w.size(); ++j) probe_w[j] += gamma_t * g[j];
            return checked_utility(utility, probe_w, t) - u_base;
        };

        if (options.record_full_gains) {
            for (std::size_t i = 0; i < n; ++i) {
                const double dg = marginal_gain(static_cast<int>(i));
                gains[static_cast<int>(i)] = dg;
                result.trace.full_gains[static_cast<std::size_t>(t) * n + i] = dg;
            }
            double realized = 0.0;
            for (int i : batch.draws) realized += gains[i];
            result.trace.realized[static_cast<std::size_t>(t)] = realized;
        } else {
            for (int i : batch.draws)
                if (!gains.count(i)) gains[i] = marginal_gain(i);
        }

        const UtilityEstimate estimate = estimate_utilities(batch, gains, sampler.dist, K);

        RoundRecord record;
        record.round = t;
        record.probs = sampler.dist.probs;
        record.draws = batch.draws;
        for (const auto& [i, g] : updates)
            if (gains.count(i) &&
                std::count(batch.draws.begin(), batch.draws.end(), i) > 0)
                record.gains.emplace_back(i, gains[i]);
        record.utility = u_base;
        record.test_metric = options.test_metric ? options.test_metric(result.model.w) : 0.0;
        result.trace.rounds.push_back(std::move(record));

        if (sampler_kind == SamplerKind::osmd) {
            sampler = step(sampler, estimate);
        } else {
            sampler.round += 1;  // uniform baseline: frozen p^t
        }

        std::vector<std::vector<double>> draw_updates;
        draw_updates.reserve(static_cast<std::size_t>(K));
        for (int i : batch.draws) draw_updates.push_back(updates.at(i));
        result.model = apply_updates(result.model, draw_updates, gamma_t);
    }

    check_finite(result.model.w, T);
    return result;
}

}  // namespace dmarket
