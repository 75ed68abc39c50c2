#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <tuple>
#include <utility>
#include <string_view>
#include <vector>

#include "mobjust/error.hpp"

namespace mobjust::stats {

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
inline double student_t_two_sided(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  return std::clamp(incomplete_beta(df / 2.0, 0.5, df / (df + t * t)), 0.0, 1.0);
}

/// Survival function of chi-square with one degree of freedom.
inline double chi_square1_sf(double x) {
  if (x <= 0.0) return 1.0;
  return std::erfc(std::sqrt(x / 2.0));
}

/// Standard normal quantile (Acklam's rational approximation with one
/// Halley refinement step against erfc).
inline double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x = 0.0;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

enum class Stars { NotSignificant, One, Two, Three };

inline Stars stars(double p) {
  if (p < 0.001) return Stars::Three;
  if (p < 0.01) return Stars::Two;
  if (p < 0.05) return Stars::One;
  return Stars::NotSignificant;
}

inline std::string_view to_string(Stars s) {
  switch (s) {
    case Stars::Three: return "***";
    case Stars::Two: return "**";
    case Stars::One: return "*";
    case Stars::NotSignificant: return "ns";
  }
  return "ns";
}

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  bool degenerate = false;

  Stars significance() const { return stars(p_value); }
};

/// Pearson r with a two-sided Student-t p-value on n - 2 degrees of freedom.
inline TestResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorKind::InsufficientUnits, "pearson: need at least 3 pairs");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::DegenerateVariance, "pearson: zero variance");
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  TestResult out;
  out.statistic = r;
  out.n_a = n;
  out.n_b = n;
  const double df = static_cast<double>(n - 2);
  const double one_minus = 1.0 - r * r;
  out.p_value = one_minus <= 0.0 ? 0.0 : student_t_two_sided(r * std::sqrt(df / one_minus), df);
  return out;
}

struct MoodTable {
  std::size_t a_above = 0, a_at_or_below = 0;
  std::size_t b_above = 0, b_at_or_below = 0;
};

struct MoodResult : TestResult {
  double grand_median = 0.0;
  MoodTable table;
};

/// Mood's median test. The grand median is the lower median of the pooled
/// sample; ties with it count as "at or below". Chi-square on the 2x2 table
/// with one degree of freedom, optionally Yates-corrected. A table with an
/// empty row or column is reported with p = 1 and `degenerate` set.
inline MoodResult moods_median_test(std::span<const double> a, std::span<const double> b,
                                    bool yates = false) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptySample, "moods_median_test: empty sample");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto mid = pooled.begin() + static_cast<std::ptrdiff_t>((pooled.size() - 1) / 2);
  std::nth_element(pooled.begin(), mid, pooled.end());
  const double m = *mid;

  MoodResult out;
  out.grand_median = m;
  out.n_a = a.size();
  out.n_b = b.size();
  auto& t = out.table;
  for (double v : a) (v > m ? t.a_above : t.a_at_or_below)++;
  for (double v : b) (v > m ? t.b_above : t.b_at_or_below)++;

  const double r1 = static_cast<double>(t.a_above + t.a_at_or_below);
  const double r2 = static_cast<double>(t.b_above + t.b_at_or_below);
  const double c1 = static_cast<double>(t.a_above + t.b_above);
  const double c2 = static_cast<double>(t.a_at_or_below + t.b_at_or_below);
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) {
    out.degenerate = true;
    out.statistic = 0.0;
    out.p_value = 1.0;
    return out;
  }
  const double total = r1 + r2;
  double diff = std::fabs(static_cast<double>(t.a_above) * static_cast<double>(t.b_at_or_below) -
                          static_cast<double>(t.a_at_or_below) * static_cast<double>(t.b_above));
  if (yates) diff = std::max(0.0, diff - total / 2.0);
  out.statistic = total * diff * diff / (r1 * r2 * c1 * c2);
  out.p_value = chi_square1_sf(out.statistic);
  return out;
}

struct MedianCi {
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t lo_rank = 0;  // 1-based order statistics
  std::size_t hi_rank = 0;
  bool small_sample = false;
};

/// 1-based ranks of the rank-based median interval for n >= 6.
inline std::pair<std::size_t, std::size_t> median_ci_ranks(std::size_t n, double level) {
  const double z = normal_quantile(0.5 + level / 2.0);
  const double half = static_cast<double>(n) / 2.0;
  const double spread = z * std::sqrt(static_cast<double>(n)) / 2.0;
  const auto clamp_rank = [n](long r) {
    return static_cast<std::size_t>(std::clamp<long>(r, 1, static_cast<long>(n)));
  };
  return {clamp_rank(std::lround(half - spread)), clamp_rank(std::lround(1.0 + half + spread))};
}

/// Lower median with a rank-based confidence interval. Samples smaller than
/// six get (min, max) and the small-sample flag.
inline MedianCi median_ci(std::span<const double> x, double level = 0.95) {
  if (x.empty()) throw Error(ErrorKind::EmptySample, "median_ci: empty sample");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  MedianCi out;
  out.median = s[(n - 1) / 2];
  if (n < 6) {
    out.small_sample = true;
    out.lo_rank = 1;
    out.hi_rank = n;
  } else {
    std::tie(out.lo_rank, out.hi_rank) = median_ci_ranks(n, level);
  }
  out.lo = s[out.lo_rank - 1];
  out.hi = s[out.hi_rank - 1];
  return out;
}

}  // namespace mobjust::stats
