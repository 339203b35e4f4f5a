#pragma once

#include <utility>
#include <vector>

// Budget-allocation instrumentation: switching-oracle value by dynamic
// programming, realized regret, and the analytical regret bound.

namespace dmarket {

// Row-major T x n matrix of true per-provider marginal gains, plus the
// realized per-round batch gain.
struct UtilityTrace {
    std::size_t T = 0;
    std::size_t n = 0;
    std::vector<double> gains;     // T * n
    std::vector<double> realized;  // length T

    double gain(std::size_t t, std::size_t i) const { return gains[t * n + i]; }
};

struct RegretReport {
    double oracle_value = 0.0;   // K * best competitor payoff over <= m-1 switches
    double realized_total = 0.0;
    double regret = 0.0;
    double bound = 0.0;
    double avg_regret = 0.0;     // regret / B
    std::vector<int> argpath;    // one optimal provider sequence, length T
};

// Best payoff over provider sequences with at most m-1 identity switches,
// scaled by K. O(T*n*m) via per-layer max and second-max. Tie-breaking:
// lowest provider index, then fewest switches.
std::pair<double, std::vector<int>> oracle_value(const UtilityTrace& trace, int m, int K);

double theorem_bound(double alpha, double eta, int n, long B, int m, int K);

RegretReport compute_regret(const UtilityTrace& trace, int m, int K, double alpha,
                            double eta, int n, long B);

// Tuning schedules used by the analysis presets.
double tuned_alpha(int n, long B);               // sqrt(n/B), capped at 1
double tuned_eta(int m, int n, long B, long T);  // sqrt(m log(nB) / (nT))

}  // namespace dmarket
