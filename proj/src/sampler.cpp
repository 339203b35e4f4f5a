#include "dmarket/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dmarket/rng.hpp"

namespace dmarket {

Batch sample_batch(const SamplerState& state, int K, std::mt19937_64& rng) {
    if (K < 1) throw std::invalid_argument("sample_batch: K must be >= 1");
    const std::size_t n = state.dist.size();
    std::vector<double> cum(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += state.dist.probs[i];
        cum[i] = acc;
    }
    cum[n - 1] = 1.0;  // guard against rounding at the top

    Batch batch;
    batch.round = state.round;
    batch.draws.resize(K);
    for (int k = 0; k < K; ++k) {
        const double u = uniform01(rng);
        auto it = std::upper_bound(cum.begin(), cum.end(), u);
        batch.draws[k] = static_cast<int>(std::min<std::size_t>(
            static_cast<std::size_t>(it - cum.begin()), n - 1));
    }
    return batch;
}

UtilityEstimate estimate_utilities(const Batch& batch,
                                   const std::unordered_map<int, double>& marginal_gains,
                                   const Distribution& dist, int K) {
    const std::size_t n = dist.size();
    std::vector<int> counts(n, 0);
    for (int i : batch.draws) {
        if (i < 0 || static_cast<std::size_t>(i) >= n)
            throw std::invalid_argument("estimate_utilities: draw index out of range");
        ++counts[i];
    }
    UtilityEstimate est;
    est.values.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[i] == 0) continue;
        auto it = marginal_gains.find(static_cast<int>(i));
        if (it == marginal_gains.end())
            throw std::invalid_argument(
                "estimate_utilities: missing marginal gain for drawn provider " +
                std::to_string(i));
        const double p = dist.probs[i];
        if (!(p > 0.0))
            throw std::logic_error(
                "estimate_utilities: drawn provider has nonpositive probability");
        est.values[i] =
            static_cast<double>(counts[i]) / (static_cast<double>(K) * p) * it->second;
        if (!std::isfinite(est.values[i]))
            throw std::invalid_argument("estimate_utilities: non-finite estimate");
    }
    return est;
}

SamplerState step(const SamplerState& state, const UtilityEstimate& estimate) {
    SamplerState next;
    next.eta = state.eta;
    next.round = state.round + 1;
    next.dist = osmd_update(state.dist, estimate.values, state.eta);
    return next;
}

}  // namespace dmarket
