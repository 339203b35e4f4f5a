#include "dmarket/clipped_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dmarket {

void Distribution::validate() const {
    const std::size_t n = probs.size();
    if (n == 0) throw std::invalid_argument("Distribution: empty");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("Distribution: alpha must be in [0,1]");
    double sum = 0.0;
    const double floor = alpha / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(probs[i]))
            throw std::invalid_argument("Distribution: non-finite entry");
        if (probs[i] < floor - 1e-12)
            throw std::invalid_argument("Distribution: entry below alpha/n at index " +
                                        std::to_string(i));
        sum += probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-12 * static_cast<double>(n))
        throw std::invalid_argument("Distribution: does not sum to 1");
}

Distribution Distribution::uniform(std::size_t n, double alpha) {
    if (n == 0) throw std::invalid_argument("Distribution: n must be >= 1");
    Distribution d;
    d.alpha = alpha;
    d.probs.assign(n, 1.0 / static_cast<double>(n));
    d.validate();
    return d;
}

TiltedWeights multiplicative_tilt(const Distribution& p,
                                  const std::vector<double>& u_hat,
                                  double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("multiplicative_tilt: eta must be > 0");
    if (u_hat.size() != p.size())
        throw std::invalid_argument("multiplicative_tilt: u_hat size mismatch");
    TiltedWeights out;
    out.weights.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!std::isfinite(u_hat[i]))
            throw std::invalid_argument("multiplicative_tilt: non-finite u_hat entry");
        const double e = std::clamp(eta * u_hat[i], -kExpCap, kExpCap);
        out.weights[i] = p.probs[i] * std::exp(e);
    }
    return out;
}

Distribution kl_project(const TiltedWeights& y, double alpha) {
    const std::size_t n = y.size();
    if (n == 0) throw std::invalid_argument("kl_project: empty input");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("kl_project: alpha must be in [0,1]");
    double total = 0.0;
    for (double w : y.weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("kl_project: weights must be finite and nonnegative");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("kl_project: all-zero weights");

    // Stable sort by (value, original index) so the permutation is
    // deterministic; the projection itself is unique regardless of ties.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return y.weights[a] < y.weights[b];
    });

    // Suffix sums of sorted weights, one reverse pass.
    std::vector<double> suffix(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;)
        suffix[i] = suffix[i + 1] + y.weights[order[i]];

    const double dn = static_cast<double>(n);
    const double floor = alpha / dn;

    // Smallest rank (1-based) where the sorted weight, rescaled by the mass
    // left after fixing lower ranks at the floor, exceeds its floor share.
    // The condition flips exactly once, so a strict float comparison is safe.
    std::size_t istar = n;  // rank, 1-based
    for (std::size_t i = 1; i <= n; ++i) {
        const double v = y.weights[order[i - 1]] *
                         (1.0 - (static_cast<double>(i - 1) / dn) * alpha);
        const double u = floor * suffix[i - 1];
        if (v > u) {
            istar = i;
            break;
        }
    }

    Distribution out;
    out.alpha = alpha;
    out.probs.assign(n, floor);
    const double scale =
        (1.0 - (static_cast<double>(istar - 1) / dn) * alpha) / suffix[istar - 1];
    for (std::size_t rank = istar; rank <= n; ++rank) {
        const std::size_t i = order[rank - 1];
        out.probs[i] = scale * y.weights[i];
    }
    return out;
}

Distribution osmd_update(const Distribution& p,
                         const std::vector<double>& u_hat,
                         double eta) {
    return kl_project(multiplicative_tilt(p, u_hat, eta), p.alpha);
}

}  // namespace dmarket
