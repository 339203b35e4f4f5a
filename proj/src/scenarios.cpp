#include "dmarket/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "dmarket/rng.hpp"
#include "json.hpp"

namespace dmarket {

namespace {

double normal01(std::mt19937_64& rng) {
    // Box-Muller on explicit 53-bit uniforms; keeps generation independent of
    // library-specific normal_distribution internals.
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t bound) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(bound)) % bound;
}

void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
}

Dataset gen_regression_dataset(int d, int samples, const std::vector<double>& w_true,
                               std::mt19937_64& rng) {
    Dataset data;
    data.x.resize(samples);
    data.y.resize(samples);
    for (int j = 0; j < samples; ++j) {
        data.x[j].resize(d);
        double dot = 0.0;
        for (int c = 0; c < d; ++c) {
            data.x[j][c] = normal01(rng);
            dot += w_true[static_cast<std::size_t>(c)] * data.x[j][c];
        }
        data.y[j] = dot + 0.5 * normal01(rng);
    }
    return data;
}

std::vector<double> regression_grad(const std::vector<double>& w, const Dataset& data,
                                    const std::vector<std::size_t>& rows) {
    std::vector<double> grad(w.size(), 0.0);
    for (std::size_t r : rows) {
        double dot = 0.0;
        for (std::size_t c = 0; c < w.size(); ++c) dot += w[c] * data.x[r][c];
        const double resid = dot - data.y[r];
        for (std::size_t c = 0; c < w.size(); ++c) grad[c] += resid * data.x[r][c];
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& g : grad) g *= inv;
    return grad;
}

std::vector<std::size_t> all_rows(const Dataset& data) {
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

}  // namespace

RegressionScenario gen_mixture_regression(int n, int d, int samples_per_provider,
                                          int k_groups, int consumer_group,
                                          int holdout_size, std::uint64_t seed) {
    if (n < 1 || d < 1 || samples_per_provider < 1 || holdout_size < 1)
        throw std::invalid_argument("gen_mixture_regression: invalid sizes");
    if (k_groups < 1 || consumer_group < 1 || consumer_group > k_groups)
        throw std::invalid_argument("gen_mixture_regression: invalid group setup");

    RegressionScenario scenario;
    scenario.d = d;
    scenario.seed = seed;
    scenario.consumer_group = consumer_group;

    auto param_rng = substream(seed, Stream::scenario, 0);
    scenario.true_params.resize(k_groups);
    for (int k = 1; k <= k_groups; ++k) {
        auto& wk = scenario.true_params[static_cast<std::size_t>(k - 1)];
        wk.resize(d);
        const double lo = 0.5 * (k - 1);
        for (int c = 0; c < d; ++c) wk[static_cast<std::size_t>(c)] = lo + 0.5 * uniform01(param_rng);
    }

    auto group_rng = substream(seed, Stream::scenario, 1);
    scenario.group_labels.resize(n);
    for (int i = 0; i < n; ++i)
        scenario.group_labels[static_cast<std::size_t>(i)] =
            1 + static_cast<int>(uniform_index(group_rng, static_cast<std::size_t>(k_groups)));

    auto holdout_rng = substream(seed, Stream::scenario, 2, 0);
    scenario.holdout = gen_regression_dataset(
        d, holdout_size, scenario.true_params[static_cast<std::size_t>(consumer_group - 1)],
        holdout_rng);

    scenario.providers.resize(n);
    for (int i = 0; i < n; ++i) {
        auto provider_rng = substream(seed, Stream::scenario, 2,
                                      static_cast<std::uint64_t>(i + 1));
        const int z = scenario.group_labels[static_cast<std::size_t>(i)];
        scenario.providers[static_cast<std::size_t>(i)] = gen_regression_dataset(
            d, samples_per_provider, scenario.true_params[static_cast<std::size_t>(z - 1)],
            provider_rng);
    }
    return scenario;
}

std::shared_ptr<ProviderOracle> gradient_oracle(Dataset dataset) {
    if (dataset.size() == 0) throw std::invalid_argument("gradient_oracle: empty dataset");
    auto data = std::make_shared<Dataset>(std::move(dataset));
    return make_oracle([data](const std::vector<double>& w, std::mt19937_64&) {
        std::vector<double> g = regression_grad(w, *data, all_rows(*data));
        for (double& v : g) v = -v;
        return g;
    });
}

std::shared_ptr<ProviderOracle> local_sgd_oracle(Dataset dataset, double local_lr,
                                                 int minibatch_size, int epochs) {
    if (dataset.size() == 0) throw std::invalid_argument("local_sgd_oracle: empty dataset");
    if (minibatch_size < 1 || static_cast<std::size_t>(minibatch_size) > dataset.size())
        throw std::invalid_argument("local_sgd_oracle: minibatch size out of range");
    if (epochs < 1) throw std::invalid_argument("local_sgd_oracle: epochs must be >= 1");
    auto data = std::make_shared<Dataset>(std::move(dataset));
    const std::size_t batch = static_cast<std::size_t>(minibatch_size);
    return make_oracle([data, local_lr, batch, epochs](const std::vector<double>& w,
                                                       std::mt19937_64& rng) {
        std::vector<double> cur = w;
        for (int e = 0; e < epochs; ++e) {
            std::vector<std::size_t> order = all_rows(*data);
            shuffle_indices(order, rng);
            for (std::size_t start = 0; start < order.size(); start += batch) {
                const std::size_t stop = std::min(order.size(), start + batch);
                std::vector<std::size_t> rows(order.begin() + static_cast<long>(start),
                                              order.begin() + static_cast<long>(stop));
                const std::vector<double> grad = regression_grad(cur, *data, rows);
                for (std::size_t c = 0; c < cur.size(); ++c) cur[c] -= local_lr * grad[c];
            }
        }
        for (std::size_t c = 0; c < cur.size(); ++c) cur[c] -= w[c];
        return cur;
    });
}

std::vector<double> default_beta_tiers(int n) {
    std::vector<double> beta(static_cast<std::size_t>(n), 90.0);
    const int decile = std::max(1, n / 10);
    for (int i = 0; i < n; ++i) {
        if (i < decile)
            beta[static_cast<std::size_t>(i)] = 0.0;
        else if (i < 2 * decile)
            beta[static_cast<std::size_t>(i)] = 20.0;
        else if (i < 3 * decile)
            beta[static_cast<std::size_t>(i)] = 50.0;
    }
    return beta;
}

ClassificationScenario gen_corrupted_classification(int n, int per_provider, int d,
                                                    int n_classes,
                                                    std::vector<double> beta_schedule,
                                                    int holdout_size, std::uint64_t seed) {
    if (n < 1 || per_provider < 1 || d < 1 || n_classes < 2 || holdout_size < 1)
        throw std::invalid_argument("gen_corrupted_classification: invalid sizes");
    if (beta_schedule.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("gen_corrupted_classification: beta schedule length != n");
    for (double b : beta_schedule)
        if (!(b >= 0.0 && b <= 100.0))
            throw std::invalid_argument("gen_corrupted_classification: beta outside [0,100]");

    ClassificationScenario scenario;
    scenario.d = d;
    scenario.seed = seed;
    scenario.n_classes = n_classes;
    scenario.beta = std::move(beta_schedule);

    auto means_rng = substream(seed, Stream::scenario, 10);
    scenario.class_means.resize(n_classes);
    for (int c = 0; c < n_classes; ++c) {
        scenario.class_means[static_cast<std::size_t>(c)].resize(d);
        for (int j = 0; j < d; ++j)
            scenario.class_means[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] =
                2.0 * normal01(means_rng);
    }

    auto gen_clean = [&](int samples, std::mt19937_64& rng) {
        ClassDataset data;
        data.x.resize(samples);
        data.labels.resize(samples);
        for (int j = 0; j < samples; ++j) {
            const int label = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_classes)));
            data.labels[static_cast<std::size_t>(j)] = label;
            data.x[static_cast<std::size_t>(j)].resize(d);
            for (int c = 0; c < d; ++c)
                data.x[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] =
                    scenario.class_means[static_cast<std::size_t>(label)][static_cast<std::size_t>(c)] +
                    normal01(rng);
        }
        return data;
    };

    auto holdout_rng = substream(seed, Stream::scenario, 11, 0);
    scenario.holdout = gen_clean(holdout_size, holdout_rng);

    scenario.providers.resize(n);
    for (int i = 0; i < n; ++i) {
        auto rng = substream(seed, Stream::scenario, 11, static_cast<std::uint64_t>(i + 1));
        ClassDataset data = gen_clean(per_provider, rng);
        const int corrupt =
            static_cast<int>(scenario.beta[static_cast<std::size_t>(i)] *
                             static_cast<double>(per_provider) / 100.0);
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_indices(order, rng);
        for (int c = 0; c < corrupt; ++c) {
            const std::size_t row = order[static_cast<std::size_t>(c)];
            const int original = data.labels[row];
            // uniform over the wrong labels
            int wrong = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n_classes - 1)));
            if (wrong >= original) ++wrong;
            data.labels[row] = wrong;
        }
        scenario.providers[static_cast<std::size_t>(i)] = std::move(data);
    }
    return scenario;
}

double regression_loss(const std::vector<double>& w, const Dataset& data) {
    double loss = 0.0;
    for (std::size_t r = 0; r < data.size(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < w.size(); ++c) dot += w[c] * data.x[r][c];
        const double resid = data.y[r] - dot;
        loss += 0.5 * resid * resid;
    }
    return loss / static_cast<double>(data.size());
}

namespace {

class ExpSquashUtility final : public UtilityFunction {
public:
    ExpSquashUtility(Dataset holdout, double tau) : holdout_(std::move(holdout)), tau_(tau) {
        if (!(tau_ > 0.0)) throw std::invalid_argument("regression_utility: tau must be > 0");
    }
    double evaluate(const std::vector<double>& w) const override {
        return std::exp(-regression_loss(w, holdout_) / tau_);
    }

private:
    Dataset holdout_;
    double tau_;
};

class AffineClipUtility final : public UtilityFunction {
public:
    AffineClipUtility(Dataset holdout, double scale)
        : holdout_(std::move(holdout)), scale_(scale) {
        if (!(scale_ > 0.0))
            throw std::invalid_argument("regression_utility_affine: scale must be > 0");
    }
    double evaluate(const std::vector<double>& w) const override {
        return std::clamp(1.0 - regression_loss(w, holdout_) / scale_, 0.0, 1.0);
    }

private:
    Dataset holdout_;
    double scale_;
};

}  // namespace

std::shared_ptr<UtilityFunction> regression_utility(Dataset holdout, double tau) {
    return std::make_shared<ExpSquashUtility>(std::move(holdout), tau);
}

std::shared_ptr<UtilityFunction> regression_utility_affine(Dataset holdout, double scale) {
    return std::make_shared<AffineClipUtility>(std::move(holdout), scale);
}

double softmax_loss(const std::vector<double>& w, const ClassDataset& data, int n_classes) {
    if (data.size() == 0) throw std::invalid_argument("softmax_loss: empty dataset");
    const std::size_t d = data.x[0].size();
    if (w.size() != static_cast<std::size_t>(n_classes) * d)
        throw std::invalid_argument("softmax_loss: parameter dimension mismatch");
    double loss = 0.0;
    std::vector<double> logits(static_cast<std::size_t>(n_classes));
    for (std::size_t r = 0; r < data.size(); ++r) {
        double maxlogit = -1e300;
        for (int c = 0; c < n_classes; ++c) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                dot += w[static_cast<std::size_t>(c) * d + j] * data.x[r][j];
            logits[static_cast<std::size_t>(c)] = dot;
            maxlogit = std::max(maxlogit, dot);
        }
        double lse = 0.0;
        for (int c = 0; c < n_classes; ++c)
            lse += std::exp(logits[static_cast<std::size_t>(c)] - maxlogit);
        loss += maxlogit + std::log(lse) -
                logits[static_cast<std::size_t>(data.labels[r])];
    }
    return loss / static_cast<double>(data.size());
}

std::shared_ptr<ProviderOracle> softmax_gradient_oracle(ClassDataset dataset, int n_classes) {
    if (dataset.size() == 0)
        throw std::invalid_argument("softmax_gradient_oracle: empty dataset");
    auto data = std::make_shared<ClassDataset>(std::move(dataset));
    return make_oracle([data, n_classes](const std::vector<double>& w, std::mt19937_64&) {
        const std::size_t d = data->x[0].size();
        if (w.size() != static_cast<std::size_t>(n_classes) * d)
            throw std::invalid_argument("softmax_gradient_oracle: dimension mismatch");
        std::vector<double> grad(w.size(), 0.0);
        std::vector<double> logits(static_cast<std::size_t>(n_classes));
        for (std::size_t r = 0; r < data->size(); ++r) {
            double maxlogit = -1e300;
            for (int c = 0; c < n_classes; ++c) {
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j)
                    dot += w[static_cast<std::size_t>(c) * d + j] * data->x[r][j];
                logits[static_cast<std::size_t>(c)] = dot;
                maxlogit = std::max(maxlogit, dot);
            }
            double lse = 0.0;
            for (int c = 0; c < n_classes; ++c) {
                logits[static_cast<std::size_t>(c)] =
                    std::exp(logits[static_cast<std::size_t>(c)] - maxlogit);
                lse += logits[static_cast<std::size_t>(c)];
            }
            for (int c = 0; c < n_classes; ++c) {
                const double prob = logits[static_cast<std::size_t>(c)] / lse;
                const double coef =
                    prob - (data->labels[r] == c ? 1.0 : 0.0);
                for (std::size_t j = 0; j < d; ++j)
                    grad[static_cast<std::size_t>(c) * d + j] += coef * data->x[r][j];
            }
        }
        const double inv = -1.0 / static_cast<double>(data->size());
        for (double& g : grad) g *= inv;
        return grad;
    });
}

namespace {

class ClassificationUtility final : public UtilityFunction {
public:
    ClassificationUtility(ClassDataset holdout, int n_classes, double tau)
        : holdout_(std::move(holdout)), n_classes_(n_classes), tau_(tau) {
        if (!(tau_ > 0.0))
            throw std::invalid_argument("classification_utility: tau must be > 0");
    }
    double evaluate(const std::vector<double>& w) const override {
        return std::exp(-softmax_loss(w, holdout_, n_classes_) / tau_);
    }

private:
    ClassDataset holdout_;
    int n_classes_;
    double tau_;
};

using json = nlohmann::json;

json dataset_to_json(const Dataset& data) {
    return json{{"x", data.x}, {"y", data.y}};
}

Dataset dataset_from_json(const json& j) {
    Dataset data;
    data.x = j.at("x").get<std::vector<std::vector<double>>>();
    data.y = j.at("y").get<std::vector<double>>();
    return data;
}

json class_dataset_to_json(const ClassDataset& data) {
    return json{{"x", data.x}, {"labels", data.labels}};
}

ClassDataset class_dataset_from_json(const json& j) {
    ClassDataset data;
    data.x = j.at("x").get<std::vector<std::vector<double>>>();
    data.labels = j.at("labels").get<std::vector<int>>();
    return data;
}

}  // namespace

std::shared_ptr<UtilityFunction> classification_utility(ClassDataset holdout, int n_classes,
                                                        double tau) {
    return std::make_shared<ClassificationUtility>(std::move(holdout), n_classes, tau);
}

std::string regression_to_json(const RegressionScenario& s) {
    json j;
    j["schema"] = "mixture-regression-v1";
    j["meta"] = {{"seed", s.seed},
                 {"d", s.d},
                 {"consumer_group", s.consumer_group},
                 {"group_labels", s.group_labels}};
    j["true_params"] = s.true_params;
    j["holdout"] = dataset_to_json(s.holdout);
    j["providers"] = json::array();
    for (const auto& p : s.providers) j["providers"].push_back(dataset_to_json(p));
    return j.dump();
}

RegressionScenario regression_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("schema").get<std::string>() != "mixture-regression-v1")
        throw std::invalid_argument("regression_from_json: unknown schema");
    RegressionScenario s;
    s.seed = j.at("meta").at("seed").get<std::uint64_t>();
    s.d = j.at("meta").at("d").get<int>();
    s.consumer_group = j.at("meta").at("consumer_group").get<int>();
    s.group_labels = j.at("meta").at("group_labels").get<std::vector<int>>();
    s.true_params = j.at("true_params").get<std::vector<std::vector<double>>>();
    s.holdout = dataset_from_json(j.at("holdout"));
    for (const auto& p : j.at("providers")) s.providers.push_back(dataset_from_json(p));
    return s;
}

std::string classification_to_json(const ClassificationScenario& s) {
    json j;
    j["schema"] = "corrupted-classification-v1";
    j["meta"] = {{"seed", s.seed},
                 {"d", s.d},
                 {"n_classes", s.n_classes},
                 {"beta", s.beta}};
    j["class_means"] = s.class_means;
    j["holdout"] = class_dataset_to_json(s.holdout);
    j["providers"] = json::array();
    for (const auto& p : s.providers) j["providers"].push_back(class_dataset_to_json(p));
    return j.dump();
}

ClassificationScenario classification_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("schema").get<std::string>() != "corrupted-classification-v1")
        throw std::invalid_argument("classification_from_json: unknown schema");
    ClassificationScenario s;
    s.seed = j.at("meta").at("seed").get<std::uint64_t>();
    s.d = j.at("meta").at("d").get<int>();
    s.n_classes = j.at("meta").at("n_classes").get<int>();
    s.beta = j.at("meta").at("beta").get<std::vector<double>>();
    s.class_means = j.at("class_means").get<std::vector<std::vector<double>>>();
    s.holdout = class_dataset_from_json(j.at("holdout"));
    for (const auto& p : j.at("providers")) s.providers.push_back(class_dataset_from_json(p));
    return s;
}

}  // namespace dmarket
