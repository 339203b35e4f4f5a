#pragma once

#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include "dmarket/clipped_simplex.hpp"

// OSMD sampler state machine: draw a batch of providers with replacement,
// build the importance-weighted unbiased utility estimate, advance the
// sampling distribution.

namespace dmarket {

struct SamplerState {
    Distribution dist;
    long round = 0;
    double eta = 0.0;
};

struct Batch {
    std::vector<int> draws;  // K provider indices, duplicates allowed
    long round = 0;
};

struct UtilityEstimate {
    std::vector<double> values;  // zero for providers outside the batch
};

// K i.i.d. draws from Categorical(state.dist) by inverse CDF with binary
// search; the cumulative vector is rebuilt once per call.
Batch sample_batch(const SamplerState& state, int K, std::mt19937_64& rng);

// values[i] = count_i / (K * p_i) * marginal_gains[i] for drawn i, else 0.
// marginal_gains must cover every distinct index in the batch.
UtilityEstimate estimate_utilities(const Batch& batch,
                                   const std::unordered_map<int, double>& marginal_gains,
                                   const Distribution& dist, int K);

// Advance: dist <- osmd_update(dist, estimate, eta); round+1.
SamplerState step(const SamplerState& state, const UtilityEstimate& estimate);

}  // namespace dmarket
