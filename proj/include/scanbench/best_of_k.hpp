#ifndef SCANBENCH_BEST_OF_K_HPP
#define SCANBENCH_BEST_OF_K_HPP

// Exact output distribution of "draw N candidates i.i.d. from P, keep the one
// with the highest gain":
//
//   P[Y=y] = P[X=y] / P[f(X)=f(y)] * (P[f(X) <= f(y)]^N - P[f(X) < f(y)]^N)
//
// Candidates may also be rejected (gain -inf); the mass of "all N rejected"
// is handed to a fallback distribution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "types.hpp"

namespace scanbench {

struct DiscreteDistribution {
  std::vector<std::size_t> support;
  std::vector<double> probabilities;
  std::vector<double> gains;

  static constexpr double kTolerance = 1e-12;

  std::size_t size() const { return support.size(); }

  /// Checks shape and normalization. Gains must be finite unless `allow_rejection`.
  void validate(bool allow_rejection = false) const {
    if (support.empty()) throw ValidationError("distribution has empty support");
    if (probabilities.size() != support.size() || (!gains.empty() && gains.size() != support.size())) {
      throw ValidationError("distribution fields differ in length");
    }
    double total = 0.0;
    for (double p : probabilities) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("distribution has invalid probabilities");
      total += p;
    }
    if (std::abs(total - 1.0) > kTolerance) throw ValidationError("distribution does not sum to 1");
    for (double g : gains) {
      if (std::isnan(g) || g == std::numeric_limits<double>::infinity()) {
        throw ValidationError("gains must be finite or -inf");
      }
      if (!allow_rejection && !std::isfinite(g)) throw ValidationError("gains must be finite");
    }
  }
};

namespace detail {

/// a^n - b^n for 0 <= b <= a <= 1.
inline double power_difference(double a, double b, unsigned n) {
  if (a - b < 1e-8 && n <= 4096) {
    // (a - b) * sum_{i<n} a^i b^(n-1-i)
    double sum = 0.0;
    double ai = 1.0;
    const double bpow_base = b;
    for (unsigned i = 0; i < n; ++i) {
      sum += ai * std::pow(bpow_base, static_cast<double>(n - 1 - i));
      ai *= a;
    }
    return (a - b) * sum;
  }
  if (b > 0.0 && a - b < 1e-8) {
    return std::exp(n * std::log(b)) * std::expm1(n * std::log1p((a - b) / b));
  }
  const auto pow_n = [n](double v) { return v <= 0.0 ? 0.0 : std::exp(n * std::log(v)); };
  return pow_n(a) - pow_n(b);
}

}  // namespace detail

/// Best-of-N distribution over the same support. Gains are compared with
/// exact equality; cells sharing a gain form one tie class.
inline DiscreteDistribution best_of_k_density(const DiscreteDistribution& d, unsigned n) {
  if (n < 1) throw ValidationError("best-of-k needs N >= 1");
  d.validate(false);
  if (d.gains.size() != d.size()) throw ValidationError("best-of-k needs one gain per cell");

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d.gains[a] < d.gains[b]; });

  DiscreteDistribution out = d;
  double below = 0.0;  // P[f(X) < g]
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double cls = 0.0;
    while (j < order.size() && d.gains[order[j]] == d.gains[order[i]]) cls += d.probabilities[order[j++]];
    const double at_most = std::min(1.0, below + cls);
    const double class_mass = detail::power_difference(at_most, below, n);
    for (std::size_t k = i; k < j; ++k) {
      const std::size_t c = order[k];
      out.probabilities[c] = cls > 0.0 ? d.probabilities[c] / cls * class_mass : 0.0;
    }
    below = at_most;
    i = j;
  }
  return out;
}

/// Best-of-N where cells with gain -inf reject the candidate. The result is
/// supported on the non-rejected cells; the probability that every candidate
/// was rejected is redistributed according to `fallback` (matched by cell index).
inline DiscreteDistribution best_of_k_with_rejection(const DiscreteDistribution& d, unsigned n,
                                                     const DiscreteDistribution& fallback) {
  if (n < 1) throw ValidationError("best-of-k needs N >= 1");
  d.validate(true);
  fallback.validate(true);
  if (d.gains.size() != d.size()) throw ValidationError("best-of-k needs one gain per cell");

  // Pool rejected cells into one pseudo-cell with gain -inf.
  DiscreteDistribution pooled;
  double rejected = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::isinf(d.gains[i])) {
      rejected += d.probabilities[i];
    } else {
      pooled.support.push_back(d.support[i]);
      pooled.probabilities.push_back(d.probabilities[i]);
      pooled.gains.push_back(d.gains[i]);
    }
  }
  if (pooled.support.empty() || rejected >= 1.0) throw ValidationError("every candidate is rejected");

  std::map<std::size_t, double> fallback_mass;
  for (std::size_t i = 0; i < fallback.size(); ++i) fallback_mass[fallback.support[i]] += fallback.probabilities[i];
  for (const auto& [cell, mass] : fallback_mass) {
    if (mass > 0.0 && std::find(pooled.support.begin(), pooled.support.end(), cell) == pooled.support.end()) {
      throw ValidationError("fallback puts mass on a rejected or unknown cell");
    }
  }

  if (rejected == 0.0) return best_of_k_density(pooled, n);

  const double lowest = *std::min_element(pooled.gains.begin(), pooled.gains.end());
  pooled.support.push_back(std::numeric_limits<std::size_t>::max());
  pooled.probabilities.push_back(rejected);
  pooled.gains.push_back(lowest - 1.0);  // any value below every real gain; only the order matters
  if (!std::isfinite(pooled.gains.back()) || pooled.gains.back() >= lowest) {
    pooled.gains.back() = std::nextafter(lowest, -std::numeric_limits<double>::infinity());
  }
  const auto picked = best_of_k_density(pooled, n);
  const double all_rejected = picked.probabilities.back();

  DiscreteDistribution out;
  out.support.assign(pooled.support.begin(), pooled.support.end() - 1);
  out.gains.assign(pooled.gains.begin(), pooled.gains.end() - 1);
  out.probabilities.assign(picked.probabilities.begin(), picked.probabilities.end() - 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (auto it = fallback_mass.find(out.support[i]); it != fallback_mass.end()) {
      out.probabilities[i] += all_rejected * it->second;
    }
  }
  return out;
}

}  // namespace scanbench

#endif  // SCANBENCH_BEST_OF_K_HPP
