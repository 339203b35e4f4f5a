#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "dmarket/clipped_simplex.hpp"
#include "dmarket/rng.hpp"
#include "test_util.hpp"

using namespace dmarket;

namespace {

Distribution dist(std::vector<double> p, double alpha) {
    Distribution d;
    d.probs = std::move(p);
    d.alpha = alpha;
    return d;
}

void check_feasible(const Distribution& q) {
    const double n = static_cast<double>(q.size());
    double sum = 0.0;
    for (double v : q.probs) {
        CHECK(v >= q.alpha / n - 1e-12);
        sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12 * n);
}

}  // namespace

TEST_CASE("multiplicative_tilt basics") {
    CHECK(multiplicative_tilt(dist({0.5, 0.5}, 0.0), {0.0, 0.0}, 1.0).weights ==
          std::vector<double>{0.5, 0.5});

    auto w = multiplicative_tilt(dist({0.5, 0.5}, 0.0), {std::log(2.0), 0.0}, 1.0).weights;
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-15));

    // extended-precision evaluation of the same formula
    auto v = multiplicative_tilt(dist({0.25, 0.75}, 0.0), {0.2, -0.1}, 2.0).weights;
    CHECK(v[0] == doctest::Approx(static_cast<double>(0.25L * std::exp(0.4L))).epsilon(1e-15));
    CHECK(v[1] == doctest::Approx(static_cast<double>(0.75L * std::exp(-0.2L))).epsilon(1e-15));
}

TEST_CASE("multiplicative_tilt rejects bad input") {
    CHECK_THROWS_AS(multiplicative_tilt(dist({0.5, 0.5}, 0.0), {0.0, 0.0}, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        multiplicative_tilt(dist({0.5, 0.5}, 0.0), {std::nan(""), 0.0}, 1.0),
        std::invalid_argument);
    CHECK_THROWS_AS(multiplicative_tilt(dist({0.5, 0.5}, 0.0), {0.0}, 1.0),
                    std::invalid_argument);
}

TEST_CASE("multiplicative_tilt clamps the exponent") {
    auto w = multiplicative_tilt(dist({0.5, 0.5}, 0.0), {1e6, -1e6}, 1.0).weights;
    CHECK(std::isfinite(w[0]));
    CHECK(w[0] > 0.0);
    CHECK(w[1] > 0.0);
}

TEST_CASE("kl_project worked examples") {
    auto q = kl_project({{1.0, 1.0, 1.0, 1.0}}, 0.4);
    for (double v : q.probs) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));

    q = kl_project({{0.01, 1.0, 1.0, 1.0}}, 0.4);
    CHECK(q.probs[0] == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(q.probs[1] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(q.probs[2] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(q.probs[3] == doctest::Approx(0.3).epsilon(1e-14));

    q = kl_project({{3.0, 1.0}}, 0.0);
    CHECK(q.probs[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(q.probs[1] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("kl_project rejects bad input") {
    CHECK_THROWS_AS(kl_project({{1.0, 1.0}}, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(kl_project({{1.0, 1.0}}, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(kl_project({{0.0, 0.0}}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(kl_project({{}}, 0.5), std::invalid_argument);
}

TEST_CASE("osmd_update worked examples") {
    SUBCASE("zero utility is a fixed point") {
        auto p = Distribution::uniform(4, 0.3);
        auto q = osmd_update(p, {0.0, 0.0, 0.0, 0.0}, 3.7);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(q.probs[i] == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("alpha=0 reduces to exponential weights") {
        auto q = osmd_update(Distribution::uniform(2, 0.0), {1.0, -1.0}, 1.0);
        const double e = std::exp(1.0), ei = std::exp(-1.0);
        CHECK(q.probs[0] == doctest::Approx(e / (e + ei)).epsilon(1e-10));
        CHECK(q.probs[1] == doctest::Approx(ei / (e + ei)).epsilon(1e-10));
    }
    SUBCASE("large tilt pins the loser at the floor") {
        auto q = osmd_update(Distribution::uniform(2, 0.5), {10.0, -10.0}, 1.0);
        CHECK(q.probs[0] == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(q.probs[1] == doctest::Approx(0.25).epsilon(1e-12));
        const auto kkt = testutil::kkt_project(
            multiplicative_tilt(Distribution::uniform(2, 0.5), {10.0, -10.0}, 1.0).weights,
            0.5);
        CHECK(testutil::linf(q.probs, kkt) < 1e-10);
    }
}

TEST_CASE("kl_project matches the KKT bisection oracle on random instances") {
    const double alphas[] = {0.0, 0.1, 0.5, 0.9, 1.0};
    auto rng = substream(20240817, Stream::acceptance, 1);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(uniform01(rng) * 99.0);
        const double alpha = alphas[trial % 5];
        std::vector<double> y(n);
        for (auto& v : y) v = std::pow(10.0, -6.0 + 12.0 * uniform01(rng));
        const auto q = kl_project({y}, alpha);
        check_feasible(q);
        CHECK(testutil::linf(q.probs, testutil::kkt_project(y, alpha)) < 1e-8);
    }
}

TEST_CASE("kl_project permutation equivariance is exact") {
    auto rng = substream(7, Stream::acceptance, 2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(uniform01(rng) * 20.0);
        const double alpha = uniform01(rng);
        std::vector<double> y(n);
        for (auto& v : y) v = std::pow(10.0, -4.0 + 8.0 * uniform01(rng));
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i)
            std::swap(perm[i - 1],
                      perm[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)) % i]);

        const auto base = kl_project({y}, alpha);
        std::vector<double> yp(n);
        for (std::size_t i = 0; i < n; ++i) yp[perm[i]] = y[i];
        const auto permuted = kl_project({yp}, alpha);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(permuted.probs[perm[i]] == base.probs[i]);
    }
}

TEST_CASE("kl_project scale invariance") {
    auto rng = substream(11, Stream::acceptance, 3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(uniform01(rng) * 30.0);
        const double alpha = uniform01(rng);
        std::vector<double> y(n), y2(n);
        const double c = std::pow(10.0, -3.0 + 6.0 * uniform01(rng));
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = std::pow(10.0, -4.0 + 8.0 * uniform01(rng));
            y2[i] = c * y[i];
        }
        CHECK(testutil::linf(kl_project({y}, alpha).probs, kl_project({y2}, alpha).probs) <=
              1e-12);
    }
}

TEST_CASE("kl_project with alpha=1 is uniform regardless of input") {
    auto rng = substream(13, Stream::acceptance, 4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 30.0);
        std::vector<double> y(n);
        for (auto& v : y) v = std::pow(10.0, -6.0 + 12.0 * uniform01(rng));
        const auto q = kl_project({y}, 1.0);
        for (double v : q.probs)
            CHECK(v == doctest::Approx(1.0 / static_cast<double>(n)).epsilon(1e-14));
    }
}

TEST_CASE("osmd_update solves the round objective (random certificates)") {
    auto rng = substream(17, Stream::acceptance, 5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(uniform01(rng) * 4.0);
        const double alpha = uniform01(rng) * 0.9;
        const double eta = 0.1 + 3.0 * uniform01(rng);
        auto p = testutil::random_clipped_point(n, alpha, rng);
        std::vector<double> u(n);
        for (auto& v : u) v = 2.0 * uniform01(rng) - 1.0;
        Distribution pd;
        pd.probs = p;
        pd.alpha = alpha;
        const auto q = osmd_update(pd, u, eta);
        const double best = testutil::osmd_objective(q.probs, p, u, eta);
        for (int probe = 0; probe < 500; ++probe) {
            const auto cand = testutil::random_clipped_point(n, alpha, rng);
            CHECK(best <= testutil::osmd_objective(cand, p, u, eta) + 1e-9);
        }
    }
}
