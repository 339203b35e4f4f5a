#include "dmarket/baselines.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dmarket/rng.hpp"

namespace dmarket {

namespace {

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

double utility_of_average(const std::vector<double>& w,
                          const std::vector<double>& update_sum, std::size_t count,
                          double gamma, const UtilityFunction& utility) {
    std::vector<double> probe = w;
    const double scale = gamma / static_cast<double>(count);
    for (std::size_t j = 0; j < probe.size(); ++j) probe[j] += scale * update_sum[j];
    return utility.evaluate(probe);
}

}  // namespace

double round_characteristic(const std::vector<double>& w,
                            const std::vector<std::vector<double>>& updates,
                            double gamma, const UtilityFunction& utility,
                            const std::vector<int>& subset) {
    if (subset.empty()) return 0.0;
    std::vector<double> sum(w.size(), 0.0);
    for (int i : subset) {
        if (i < 0 || static_cast<std::size_t>(i) >= updates.size())
            throw std::invalid_argument("round_characteristic: subset index out of range");
        const auto& g = updates[static_cast<std::size_t>(i)];
        if (g.size() != w.size())
            throw std::invalid_argument("round_characteristic: update dimension mismatch");
        for (std::size_t j = 0; j < w.size(); ++j) sum[j] += g[j];
    }
    return utility_of_average(w, sum, subset.size(), gamma, utility) - utility.evaluate(w);
}

std::vector<double> exact_round_shapley(const std::vector<double>& w,
                                        const std::vector<std::vector<double>>& updates,
                                        double gamma, const UtilityFunction& utility) {
    const int n = static_cast<int>(updates.size());
    if (n < 1 || n > 16)
        throw std::invalid_argument("exact_round_shapley: n must be in [1,16]");

    const double u_base = utility.evaluate(w);
    const std::uint32_t masks = 1u << n;

    // v(S) for every coalition, computed once each.
    std::vector<double> value(masks, 0.0);
    std::vector<double> sum(w.size());
    for (std::uint32_t mask = 1; mask < masks; ++mask) {
        std::fill(sum.begin(), sum.end(), 0.0);
        std::size_t count = 0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                ++count;
                for (std::size_t j = 0; j < w.size(); ++j)
                    sum[j] += updates[static_cast<std::size_t>(i)][j];
            }
        }
        value[mask] = utility_of_average(w, sum, count, gamma, utility) - u_base;
    }

    // weight(s) = s!(n-s-1)!/n!
    std::vector<double> weight(static_cast<std::size_t>(n));
    double lognfact = 0.0;
    for (int k = 2; k <= n; ++k) lognfact += std::log(static_cast<double>(k));
    for (int s = 0; s < n; ++s) {
        double lw = -lognfact;
        for (int k = 2; k <= s; ++k) lw += std::log(static_cast<double>(k));
        for (int k = 2; k <= n - s - 1; ++k) lw += std::log(static_cast<double>(k));
        weight[static_cast<std::size_t>(s)] = std::exp(lw);
    }

    std::vector<double> sv(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        KahanSum acc;
        const std::uint32_t bit = 1u << i;
        for (std::uint32_t mask = 0; mask < masks; ++mask) {
            if (mask & bit) continue;
            const int s = std::popcount(mask);
            acc.add(weight[static_cast<std::size_t>(s)] * (value[mask | bit] - value[mask]));
        }
        sv[static_cast<std::size_t>(i)] = acc.sum;
    }
    return sv;
}

std::vector<double> perm_sampling_shapley(const std::vector<double>& w,
                                          const std::vector<std::vector<double>>& updates,
                                          double gamma, const UtilityFunction& utility,
                                          int num_perms, std::mt19937_64& rng) {
    const std::size_t n = updates.size();
    if (n < 1) throw std::invalid_argument("perm_sampling_shapley: no updates");
    if (num_perms < 1) throw std::invalid_argument("perm_sampling_shapley: num_perms >= 1");

    const double u_base = utility.evaluate(w);
    std::vector<KahanSum> acc(n);
    std::vector<std::size_t> order(n);
    std::vector<double> sum(w.size());

    for (int p = 0; p < num_perms; ++p) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j =
                static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)) % i;
            std::swap(order[i - 1], order[j]);
        }
        std::fill(sum.begin(), sum.end(), 0.0);
        double prev = 0.0;  // v of the running prefix
        for (std::size_t pos = 0; pos < n; ++pos) {
            const std::size_t i = order[pos];
            for (std::size_t j = 0; j < w.size(); ++j) sum[j] += updates[i][j];
            const double cur =
                utility_of_average(w, sum, pos + 1, gamma, utility) - u_base;
            acc[i].add(cur - prev);
            prev = cur;
        }
    }

    std::vector<double> sv(n);
    for (std::size_t i = 0; i < n; ++i)
        sv[i] = acc[i].sum / static_cast<double>(num_perms);
    return sv;
}

std::vector<double> shapley_revenue(const std::vector<double>& values,
                                    double total_revenue, bool* degenerate) {
    if (values.empty()) throw std::invalid_argument("shapley_revenue: empty values");
    double positive_mass = 0.0;
    for (double v : values) positive_mass += std::max(v, 0.0);
    std::vector<double> payments(values.size(), 0.0);
    if (positive_mass <= 0.0) {
        if (degenerate) *degenerate = true;
        const double share = total_revenue / static_cast<double>(values.size());
        std::fill(payments.begin(), payments.end(), share);
        return payments;
    }
    if (degenerate) *degenerate = false;
    for (std::size_t i = 0; i < values.size(); ++i)
        payments[i] = total_revenue * std::max(values[i], 0.0) / positive_mass;
    return payments;
}

ShapleyReport accumulate_shapley(const MarketConfig& config,
                                 const std::vector<std::shared_ptr<ProviderOracle>>& oracles,
                                 const UtilityFunction& utility, const ModelState& w0,
                                 int permutations_per_round) {
    config.validate();
    const std::size_t n = static_cast<std::size_t>(config.n);
    if (oracles.size() != n) throw std::invalid_argument("accumulate_shapley: expected n oracles");
    const long T = config.rounds();

    ShapleyReport report;
    report.rounds_used = T;
    report.permutations_per_round = permutations_per_round;
    std::vector<KahanSum> acc(n);

    ModelState model = w0;
    SamplerState sampler;
    sampler.dist = Distribution::uniform(n, config.alpha);
    sampler.eta = config.eta;

    for (long t = 0; t < T; ++t) {
        const double gamma_t = config.gamma_at(t);
        std::vector<std::vector<double>> updates(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto oracle_rng = substream(config.seed, Stream::oracle,
                                        static_cast<std::uint64_t>(t),
                                        static_cast<std::uint64_t>(i));
            updates[i] = oracles[i]->update(model.w, oracle_rng);
        }

        std::vector<double> sv;
        if (permutations_per_round == 0) {
            sv = exact_round_shapley(model.w, updates, gamma_t, utility);
        } else {
            auto perm_rng = substream(config.seed, Stream::shapley,
                                      static_cast<std::uint64_t>(t));
            sv = perm_sampling_shapley(model.w, updates, gamma_t, utility,
                                       permutations_per_round, perm_rng);
        }
        for (std::size_t i = 0; i < n; ++i) acc[i].add(sv[i]);

        // Uniform-sampling trajectory for the model itself, mirroring the
        // market loop's uniform path.
        auto sampling_rng = substream(config.seed, Stream::sampling,
                                      static_cast<std::uint64_t>(t));
        sampler.round = t;
        const Batch batch = sample_batch(sampler, config.K, sampling_rng);
        std::vector<std::vector<double>> draw_updates;
        draw_updates.reserve(static_cast<std::size_t>(config.K));
        for (int i : batch.draws) draw_updates.push_back(updates[static_cast<std::size_t>(i)]);
        model = apply_updates(model, draw_updates, gamma_t);
    }

    report.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) report.values[i] = acc[i].sum;
    return report;
}

}  // namespace dmarket
