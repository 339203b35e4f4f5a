#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dmarket/regret.hpp"
#include "dmarket/rng.hpp"
#include "test_util.hpp"

using namespace dmarket;

namespace {

UtilityTrace make_trace(std::size_t T, std::size_t n, std::vector<double> gains,
                        std::vector<double> realized = {}) {
    UtilityTrace trace;
    trace.T = T;
    trace.n = n;
    trace.gains = std::move(gains);
    trace.realized = realized.empty() ? std::vector<double>(T, 0.0) : std::move(realized);
    return trace;
}

int switches(const std::vector<int>& path) {
    int s = 0;
    for (std::size_t t = 1; t < path.size(); ++t) s += (path[t] != path[t - 1]);
    return s;
}

double path_payoff(const UtilityTrace& trace, const std::vector<int>& path, int K) {
    double total = 0.0;
    for (std::size_t t = 0; t < trace.T; ++t)
        total += trace.gain(t, static_cast<std::size_t>(path[t]));
    return static_cast<double>(K) * total;
}

// Exhaustive search over all n^T provider sequences with at most m-1 switches.
double brute_force_value(const UtilityTrace& trace, int m, int K) {
    const std::size_t T = trace.T, n = trace.n;
    std::vector<int> seq(T, 0);
    double best = -std::numeric_limits<double>::infinity();
    while (true) {
        if (switches(seq) <= m - 1) best = std::max(best, path_payoff(trace, seq, K));
        std::size_t pos = 0;
        while (pos < T && seq[pos] == static_cast<int>(n) - 1) seq[pos++] = 0;
        if (pos == T) break;
        ++seq[pos];
    }
    return best;
}

}  // namespace

TEST_CASE("oracle_value with m=1 picks the best constant provider") {
    // column sums: 1.5, 2.0, 0.5
    const auto trace = make_trace(
        2, 3, {1.0, 0.5, 0.5, 0.5, 1.5, 0.0});
    const auto [value, path] = oracle_value(trace, 1, 4);
    CHECK(value == doctest::Approx(4.0 * 2.0).epsilon(1e-14));
    CHECK(path == std::vector<int>{1, 1});
}

TEST_CASE("oracle_value with m=T tracks the per-round maximum") {
    const auto trace = make_trace(
        3, 2, {0.2, 0.9, 0.8, 0.1, 0.3, 0.7});
    const auto [value, path] = oracle_value(trace, 3, 1);
    CHECK(value == doctest::Approx(0.9 + 0.8 + 0.7).epsilon(1e-14));
    CHECK(path == std::vector<int>{1, 0, 1});
}

TEST_CASE("oracle_value worked example: one switch, value 3") {
    const auto trace = make_trace(
        3, 2, {1.0, 0.0, 0.0, 1.0, 0.0, 1.0});
    const auto [value, path] = oracle_value(trace, 2, 1);
    CHECK(value == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(path == std::vector<int>{0, 1, 1});
}

TEST_CASE("oracle_value tie-breaking prefers the lowest provider index") {
    // both providers identical: path should stay on provider 0 throughout
    const auto trace = make_trace(3, 2, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    const auto [value, path] = oracle_value(trace, 3, 1);
    CHECK(value == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(path == std::vector<int>{0, 0, 0});
}

TEST_CASE("oracle_value equals exhaustive search on random instances") {
    auto rng = substream(606, Stream::acceptance, 9);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t T = 1 + static_cast<std::size_t>(uniform01(rng) * 6.0);
        const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 4.0);
        const int m = 1 + static_cast<int>(uniform01(rng) * static_cast<double>(T)) %
                              static_cast<int>(T);
        const int K = 1 + static_cast<int>(uniform01(rng) * 5.0);
        std::vector<double> gains(T * n);
        for (auto& g : gains) g = 2.0 * uniform01(rng) - 1.0;
        const auto trace = make_trace(T, n, std::move(gains));

        const auto [value, path] = oracle_value(trace, m, K);
        CHECK(value == doctest::Approx(brute_force_value(trace, m, K)).epsilon(1e-12));
        // the reported path must be feasible and achieve the reported value
        CHECK(switches(path) <= m - 1);
        CHECK(path_payoff(trace, path, K) == doctest::Approx(value).epsilon(1e-12));
    }
}

TEST_CASE("oracle_value is nondecreasing in the switch budget") {
    auto rng = substream(607, Stream::acceptance, 9);
    std::vector<double> gains(8 * 3);
    for (auto& g : gains) g = uniform01(rng);
    const auto trace = make_trace(8, 3, std::move(gains));
    double prev = -1.0;
    for (int m = 1; m <= 8; ++m) {
        const double v = oracle_value(trace, m, 2).first;
        CHECK(v >= prev - 1e-14);
        prev = v;
    }
}

TEST_CASE("oracle_value validates input") {
    const auto trace = make_trace(2, 2, {0.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(oracle_value(trace, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(oracle_value(trace, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(oracle_value(trace, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(oracle_value(make_trace(2, 2, {0.0}), 1, 1), std::invalid_argument);
}

TEST_CASE("theorem_bound") {
    // alpha*B + eta*n*B/2 + m*K*log(n/alpha)/eta, frozen by hand:
    // 0.1*1000 + 0.01*10*1000/2 + 2*5*log(100)/0.01 = 150 + 1000*log(100)
    CHECK(theorem_bound(0.1, 0.01, 10, 1000, 2, 5) ==
          doctest::Approx(150.0 + 1000.0 * std::log(100.0)).epsilon(1e-13));

    CHECK(std::isinf(theorem_bound(0.0, 0.5, 4, 100, 1, 1)));
    CHECK_THROWS_AS(theorem_bound(-0.1, 0.5, 4, 100, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(theorem_bound(0.5, 0.0, 4, 100, 1, 1), std::invalid_argument);
}

TEST_CASE("compute_regret assembles the report consistently") {
    const auto trace = make_trace(3, 2, {1.0, 0.0, 0.0, 1.0, 0.0, 1.0},
                                  {0.5, 0.5, 1.0});
    const auto report = compute_regret(trace, 2, 1, 0.1, 0.5, 2, 3);
    CHECK(report.oracle_value == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(report.realized_total == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(report.regret == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(report.avg_regret == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(report.bound ==
          doctest::Approx(theorem_bound(0.1, 0.5, 2, 3, 2, 1)).epsilon(1e-14));
    CHECK(report.argpath == std::vector<int>{0, 1, 1});
}

TEST_CASE("tuning schedules") {
    CHECK(tuned_alpha(40, 6000) == doctest::Approx(std::sqrt(40.0 / 6000.0)).epsilon(1e-15));
    CHECK(tuned_alpha(10, 5) == 1.0);  // capped
    CHECK(tuned_eta(2, 40, 6000, 1500) ==
          doctest::Approx(std::sqrt(2.0 * std::log(240000.0) / 60000.0)).epsilon(1e-15));
}
