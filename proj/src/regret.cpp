#include "dmarket/regret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dmarket {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

std::pair<double, std::vector<int>> oracle_value(const UtilityTrace& trace, int m, int K) {
    const std::size_t T = trace.T;
    const std::size_t n = trace.n;
    if (T == 0 || n == 0) throw std::invalid_argument("oracle_value: empty trace");
    if (trace.gains.size() != T * n) throw std::invalid_argument("oracle_value: bad gains size");
    if (m < 1 || static_cast<std::size_t>(m) > T)
        throw std::invalid_argument("oracle_value: m must be in [1, T]");
    if (K < 1) throw std::invalid_argument("oracle_value: K must be >= 1");

    const std::size_t S = static_cast<std::size_t>(m);  // switch states 0..m-1
    // f[t][s*n + i]: best suffix payoff from round t with current action i and
    // s switches already used.
    std::vector<std::vector<double>> f(T + 1, std::vector<double>(S * n, 0.0));

    for (std::size_t t = T; t-- > 0;) {
        for (std::size_t s = 0; s < S; ++s) {
            // max and runner-up of the next layer at s+1, for the switch move
            double best1 = kNegInf, best2 = kNegInf;
            std::size_t best1_idx = 0;
            if (s + 1 < S) {
                const double* next = &f[t + 1][(s + 1) * n];
                for (std::size_t j = 0; j < n; ++j) {
                    if (next[j] > best1) {
                        best2 = best1;
                        best1 = next[j];
                        best1_idx = j;
                    } else if (next[j] > best2) {
                        best2 = next[j];
                    }
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                double cont = f[t + 1][s * n + i];  // stay
                if (s + 1 < S) {
                    const double sw = (i == best1_idx) ? best2 : best1;
                    cont = std::max(cont, sw);
                }
                f[t][s * n + i] = trace.gain(t, i) + cont;
            }
        }
    }

    // Start: best provider at t=0 with zero switches used; ties -> lowest index.
    std::size_t cur = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (f[0][i] > f[0][cur]) cur = i;
    const double value = static_cast<double>(K) * f[0][cur];

    std::vector<int> path(T);
    std::size_t s = 0;
    path[0] = static_cast<int>(cur);
    for (std::size_t t = 1; t < T; ++t) {
        // candidates: stay on cur, or switch to any j != cur if budget allows;
        // max value first, lowest provider index on ties
        double best_val = f[t][s * n + cur];
        std::size_t best_j = cur;
        std::size_t best_s = s;
        if (s + 1 < S) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == cur) continue;
                const double v = f[t][(s + 1) * n + j];
                if (v > best_val || (v == best_val && j < best_j)) {
                    best_val = v;
                    best_j = j;
                    best_s = s + 1;
                }
            }
        }
        cur = best_j;
        s = best_s;
        path[t] = static_cast<int>(cur);
    }
    return {value, path};
}

double theorem_bound(double alpha, double eta, int n, long B, int m, int K) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("theorem_bound: alpha must be in [0,1]");
    if (!(eta > 0.0)) throw std::invalid_argument("theorem_bound: eta must be > 0");
    if (alpha == 0.0) return std::numeric_limits<double>::infinity();
    const double dB = static_cast<double>(B);
    return alpha * dB + eta * static_cast<double>(n) * dB / 2.0 +
           static_cast<double>(m) * static_cast<double>(K) *
               std::log(static_cast<double>(n) / alpha) / eta;
}

RegretReport compute_regret(const UtilityTrace& trace, int m, int K, double alpha,
                            double eta, int n, long B) {
    RegretReport report;
    auto [value, path] = oracle_value(trace, m, K);
    report.oracle_value = value;
    report.argpath = std::move(path);
    report.realized_total = 0.0;
    for (double r : trace.realized) report.realized_total += r;
    report.regret = report.oracle_value - report.realized_total;
    report.bound = theorem_bound(alpha, eta, n, B, m, K);
    report.avg_regret = report.regret / static_cast<double>(B);
    return report;
}

double tuned_alpha(int n, long B) {
    return std::min(1.0, std::sqrt(static_cast<double>(n) / static_cast<double>(B)));
}

double tuned_eta(int m, int n, long B, long T) {
    return std::sqrt(static_cast<double>(m) *
                     std::log(static_cast<double>(n) * static_cast<double>(B)) /
                     (static_cast<double>(n) * static_cast<double>(T)));
}

}  // namespace dmarket
