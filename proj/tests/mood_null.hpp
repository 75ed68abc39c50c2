#pragma once

// Permutation-null helpers for Mood's median test with two equal-size
// samples of distinct values.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "mobjust/rng.hpp"
#include "mobjust/stats.hpp"

namespace mood_null {

/// With 2n distinct pooled values exactly n lie at or below the lower
/// median, so the count k of sample a at or below it is hypergeometric.
/// The table gives chi-square 2 (n - 2k)^2 / n. Returns P(p-value = v) for
/// every attainable v.
inline std::map<double, double> exact_distribution(int n) {
  std::map<double, double> atoms;
  const double log_total = std::lgamma(2.0 * n + 1) - 2.0 * std::lgamma(n + 1.0);
  for (int k = 0; k <= n; ++k) {
    const double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    const double prob = std::exp(2.0 * log_c - log_total);
    const double chi2 = 2.0 * (n - 2.0 * k) * (n - 2.0 * k) / n;
    atoms[std::erfc(std::sqrt(chi2 / 2.0))] += prob;
  }
  return atoms;
}

/// p-values of `trials` random equal splits of 2n distinct values.
inline std::vector<double> simulate(int n, int trials, std::uint64_t seed) {
  mobjust::Rng rng(seed);
  std::vector<double> pooled(static_cast<std::size_t>(2 * n));
  for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] = static_cast<double>(i) + rng.uniform(0.0, 0.5);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    for (std::size_t k = pooled.size(); k > 1; --k)
      std::swap(pooled[k - 1], pooled[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1))]);
    const std::span<const double> all(pooled);
    out.push_back(mobjust::stats::moods_median_test(all.first(static_cast<std::size_t>(n)),
                                                    all.last(static_cast<std::size_t>(n)))
                      .p_value);
  }
  return out;
}

/// Kolmogorov-Smirnov distance between the sample's empirical CDF and a
/// discrete CDF given by atoms. Both are step functions jumping only at
/// atoms, so comparing at every atom is exact.
inline double ks_discrete(std::vector<double> sample, const std::map<double, double>& atoms) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double cdf = 0.0, d = 0.0;
  for (const auto& [v, prob] : atoms) {
    cdf += prob;
    // Match simulated values to atoms with a relative tolerance.
    const auto it = std::upper_bound(sample.begin(), sample.end(), v * (1.0 + 1e-9) + 1e-300);
    d = std::max(d, std::fabs(static_cast<double>(it - sample.begin()) / n - cdf));
  }
  return d;
}

/// Kolmogorov-Smirnov distance to the continuous uniform CDF on [0, 1].
inline double ks_uniform(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double v = sample[i];
    d = std::max({d, std::fabs(static_cast<double>(i + 1) / n - v), std::fabs(v - static_cast<double>(i) / n)});
  }
  return d;
}

inline double false_positive_rate(const std::vector<double>& p, double alpha = 0.05) {
  const auto hits = std::count_if(p.begin(), p.end(), [alpha](double v) { return v < alpha; });
  return static_cast<double>(hits) / static_cast<double>(p.size());
}

}  // namespace mood_null
