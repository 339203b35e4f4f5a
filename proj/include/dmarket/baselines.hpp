#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dmarket/market.hpp"

// Shapley-style revenue baselines: per-round characteristic function over
// averaged coalition updates, exact enumeration (small n), and the
// permutation-sampling estimator, accumulated along a uniform-sampling
// training trajectory.

namespace dmarket {

struct ShapleyReport {
    std::vector<double> values;     // accumulated per-round Shapley values
    long rounds_used = 0;
    int permutations_per_round = 0;  // 0 for exact
};

// v(empty) = 0; v(S) = U(w + (gamma/|S|) * sum_{i in S} g_i) - U(w).
double round_characteristic(const std::vector<double>& w,
                            const std::vector<std::vector<double>>& updates,
                            double gamma, const UtilityFunction& utility,
                            const std::vector<int>& subset);

// Full 2^n enumeration; refuses n > 16. Test oracle and small-n baseline.
std::vector<double> exact_round_shapley(const std::vector<double>& w,
                                        const std::vector<std::vector<double>>& updates,
                                        double gamma, const UtilityFunction& utility);

// Average marginal contribution over sampled provider orderings; unbiased
// for exact_round_shapley.
std::vector<double> perm_sampling_shapley(const std::vector<double>& w,
                                          const std::vector<std::vector<double>>& updates,
                                          double gamma, const UtilityFunction& utility,
                                          int num_perms, std::mt19937_64& rng);

// payment_i proportional to max(values_i, 0). If no entry is positive the
// split degenerates to uniform; *degenerate reports that when non-null.
std::vector<double> shapley_revenue(const std::vector<double>& values,
                                    double total_revenue, bool* degenerate = nullptr);

// Drives a uniform-sampling trajectory and accumulates per-round Shapley
// values over all n oracle updates each round. The full-oracle probing is
// out-of-market accounting used only for baseline comparison.
ShapleyReport accumulate_shapley(const MarketConfig& config,
                                 const std::vector<std::shared_ptr<ProviderOracle>>& oracles,
                                 const UtilityFunction& utility, const ModelState& w0,
                                 int permutations_per_round);

}  // namespace dmarket
