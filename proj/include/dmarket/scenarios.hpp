#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dmarket/market.hpp"

// Synthetic data generators and concrete provider oracles: mixture linear
// regression and label-corrupted classification, at desk scale by default.

namespace dmarket {

struct Dataset {
    std::vector<std::vector<double>> x;
    std::vector<double> y;

    std::size_t size() const { return x.size(); }
};

struct RegressionScenario {
    Dataset holdout;                          // consumer's hold-out set (index 0)
    std::vector<Dataset> providers;           // n provider datasets
    std::vector<int> group_labels;            // z_1..z_n (1-based group ids)
    int consumer_group = 1;                   // z_0
    std::vector<std::vector<double>> true_params;  // w_1..w_{K_groups}
    int d = 0;
    std::uint64_t seed = 0;
};

struct ClassDataset {
    std::vector<std::vector<double>> x;
    std::vector<int> labels;

    std::size_t size() const { return x.size(); }
};

struct ClassificationScenario {
    ClassDataset holdout;
    std::vector<ClassDataset> providers;
    std::vector<double> beta;                 // per-provider corruption percentage
    std::vector<std::vector<double>> class_means;
    int n_classes = 0;
    int d = 0;
    std::uint64_t seed = 0;
};

// Mixture linear regression: features N(0,1), group parameters w_k with
// entries i.i.d. U[0.5(k-1), 0.5k], labels <w_{z_i}, x> + N(0, 0.5^2) noise,
// provider groups uniform over [K_groups], consumer group fixed.
RegressionScenario gen_mixture_regression(int n, int d, int samples_per_provider,
                                          int k_groups, int consumer_group,
                                          int holdout_size, std::uint64_t seed);

// Exact negated mean-half-squared-loss gradient of the provider's dataset.
std::shared_ptr<ProviderOracle> gradient_oracle(Dataset dataset);

// One (or more) epochs of sequential mini-batch SGD from w; returns w+ - w.
// The minibatch order is shuffled from the oracle's substream.
std::shared_ptr<ProviderOracle> local_sgd_oracle(Dataset dataset, double local_lr,
                                                 int minibatch_size, int epochs = 1);

// Gaussian class-mean features; floor(beta% of m_i) labels flipped to a
// uniformly random wrong label. Default tiering: first decile beta=0, second
// 20, third 50, rest 90.
ClassificationScenario gen_corrupted_classification(int n, int per_provider, int d,
                                                    int n_classes,
                                                    std::vector<double> beta_schedule,
                                                    int holdout_size, std::uint64_t seed);

std::vector<double> default_beta_tiers(int n);

// Mean half-squared loss on a regression dataset.
double regression_loss(const std::vector<double>& w, const Dataset& data);

// U(w) = exp(-loss(w, holdout)/tau) in (0,1].
std::shared_ptr<UtilityFunction> regression_utility(Dataset holdout, double tau);

// Affine alternative: U(w) = clamp(1 - loss/scale, 0, 1).
std::shared_ptr<UtilityFunction> regression_utility_affine(Dataset holdout, double scale);

// Multinomial logistic regression pieces; w is row-major (n_classes x d).
double softmax_loss(const std::vector<double>& w, const ClassDataset& data, int n_classes);
std::shared_ptr<ProviderOracle> softmax_gradient_oracle(ClassDataset dataset, int n_classes);
std::shared_ptr<UtilityFunction> classification_utility(ClassDataset holdout, int n_classes,
                                                        double tau);

// JSON (de)serialization for replaying scenarios across runs.
std::string regression_to_json(const RegressionScenario& s);
RegressionScenario regression_from_json(const std::string& text);
std::string classification_to_json(const ClassificationScenario& s);
ClassificationScenario classification_from_json(const std::string& text);

}  // namespace dmarket
