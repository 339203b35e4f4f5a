#pragma once

#include <cstddef>
#include <vector>

// Exact solver for the mirror-descent update on the clipped simplex
//   A = { p : sum p_i = 1, p_i >= alpha/n }.
// The update is a multiplicative tilt followed by a KL-Bregman projection
// onto A, solved in closed form by a sort plus one water-filling pass.

namespace dmarket {

// Probability vector on the clipped simplex.
struct Distribution {
    std::vector<double> probs;
    double alpha = 0.0;

    std::size_t size() const { return probs.size(); }

    // Throws std::invalid_argument if the invariants do not hold:
    // entries sum to 1 (tol 1e-12*n) and every entry >= alpha/n - 1e-12.
    void validate() const;

    static Distribution uniform(std::size_t n, double alpha);
};

// Unnormalized strictly positive masses after the tilt.
struct TiltedWeights {
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
};

// Exponent clamp for the tilt. Keeps single large importance-weighted
// estimates from overflowing; preserves the ordering of tilted weights.
inline constexpr double kExpCap = 500.0;

// weights[i] = p_i * exp(clamp(eta * u_hat[i], -kExpCap, kExpCap)).
TiltedWeights multiplicative_tilt(const Distribution& p,
                                  const std::vector<double>& u_hat,
                                  double eta);

// argmin over q in A of the KL divergence D(q || y). O(n log n).
Distribution kl_project(const TiltedWeights& y, double alpha);

// kl_project(multiplicative_tilt(p, u_hat, eta), p.alpha).
Distribution osmd_update(const Distribution& p,
                         const std::vector<double>& u_hat,
                         double eta);

}  // namespace dmarket
