#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "mobjust/rng.hpp"
#include "mobjust/stats.hpp"
#include "mood_null.hpp"

using namespace mobjust;
using namespace mobjust::stats;

TEST(SpecialFunctions, IncompleteBetaMatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 10.0, 75.0})
    for (double b : {0.5, 1.0, 3.0, 40.0})
      for (double x : {1e-6, 0.01, 0.2, 0.5, 0.77, 0.99}) {
        const double want = boost::math::ibeta(a, b, x);
        EXPECT_NEAR(incomplete_beta(a, b, x), want, 1e-12 + 1e-10 * want) << a << " " << b << " " << x;
      }
  EXPECT_EQ(incomplete_beta(2, 3, 0.0), 0.0);
  EXPECT_EQ(incomplete_beta(2, 3, 1.0), 1.0);
}

TEST(SpecialFunctions, StudentTMatchesBoost) {
  for (double df : {1.0, 3.0, 8.0, 30.0, 500.0})
    for (double t : {0.0, 0.3, 1.0, 2.2, 5.0, 12.0}) {
      const double want = 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(df), t));
      EXPECT_NEAR(student_t_two_sided(t, df), want, 1e-12 + 1e-9 * want) << df << " " << t;
    }
}

TEST(SpecialFunctions, ChiSquareAndNormalMatchBoost) {
  const boost::math::chi_squared chi(1.0);
  for (double x : {0.01, 0.5, 3.84, 8.0, 20.0})
    EXPECT_NEAR(chi_square1_sf(x), boost::math::cdf(boost::math::complement(chi, x)), 1e-14);
  EXPECT_NEAR(chi_square1_sf(8.0), 0.0046777349810472658, 1e-15);
  const boost::math::normal z;
  for (double p : {1e-10, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975})
    EXPECT_NEAR(normal_quantile(p), boost::math::quantile(z, p), 1e-12) << p;
  // Far in the upper tail the quantile is ill-conditioned, so check the
  // backward error instead.
  for (double p : {0.999, 0.999999, 1.0 - 1e-9})
    EXPECT_NEAR(boost::math::cdf(z, normal_quantile(p)), p, 1e-15) << p;
}

TEST(Stars, Thresholds) {
  EXPECT_EQ(to_string(stars(0.0005)), "***");
  EXPECT_EQ(to_string(stars(0.005)), "**");
  EXPECT_EQ(to_string(stars(0.02)), "*");
  EXPECT_EQ(to_string(stars(0.5)), "ns");
  EXPECT_EQ(to_string(stars(0.05)), "ns");
}

TEST(Pearson, PerfectLinesAndKnownValue) {
  const std::vector<double> x = {1, 2, 3, 4, 5, 6, 7};
  std::vector<double> up, down;
  for (double v : x) {
    up.push_back(2 * v + 1);
    down.push_back(-v);
  }
  EXPECT_LT(std::fabs(pearson(x, up).statistic - 1.0), 1e-12);
  EXPECT_LT(std::fabs(pearson(x, down).statistic + 1.0), 1e-12);
  EXPECT_EQ(pearson(x, up).p_value, 0.0);

  // Covariance formula evaluated in 50-digit arithmetic: r = 9 / sqrt(10 * 14.5).
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 1, 4, 3, 6};
  const auto r = pearson(a, b);
  EXPECT_NEAR(r.statistic, 0.821994936526786444, 1e-14);
  EXPECT_NEAR(r.p_value, 0.0877066470080655, 1e-12);
}

TEST(Pearson, ErrorsAndSymmetry) {
  const std::vector<double> x = {1, 2, 3}, c = {4, 4, 4}, shortv = {1, 2};
  EXPECT_THROW(pearson(x, shortv), Error);
  EXPECT_THROW(pearson(shortv, shortv), Error);
  EXPECT_THROW(pearson(x, c), Error);
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> u, v;
    for (int i = 0; i < 30; ++i) {
      u.push_back(rng.normal());
      v.push_back(u.back() * rng.uniform(-2, 2) + rng.normal());
    }
    const auto ab = pearson(u, v), ba = pearson(v, u);
    ASSERT_EQ(ab.statistic, ba.statistic);
    ASSERT_LE(std::fabs(ab.statistic), 1.0 + 1e-12);
    ASSERT_GE(ab.p_value, 0.0);
    ASSERT_LE(ab.p_value, 1.0);
  }
}

TEST(MoodsMedianTest, IdenticalSamplesShowNoAssociation) {
  const std::vector<double> a = {3, 1, 4, 1, 5, 9, 2, 6};
  const auto r = moods_median_test(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(MoodsMedianTest, MaximalSeparation) {
  const std::vector<double> a = {1, 1, 1, 1}, b = {9, 9, 9, 9};
  const auto r = moods_median_test(a, b);
  // Pooled lower median 1; table (above, at-or-below) = a (0, 4), b (4, 0):
  // 8 * (0 * 0 - 4 * 4)^2 / (4 * 4 * 4 * 4) = 8.
  EXPECT_NEAR(r.statistic, 8.0, 1e-9);
  EXPECT_NEAR(r.p_value, 0.0047, 1e-4);
  EXPECT_EQ(r.table.a_at_or_below, 4u);
  EXPECT_EQ(r.table.b_above, 4u);
  // Yates: 8 * (16 - 4)^2 / 256 = 4.5.
  EXPECT_NEAR(moods_median_test(a, b, true).statistic, 4.5, 1e-12);
}

TEST(MoodsMedianTest, DegenerateAndEmpty) {
  const std::vector<double> a = {5, 5, 5}, b = {5, 5};
  const auto r = moods_median_test(a, b);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_THROW(moods_median_test(a, std::vector<double>{}), Error);
}

TEST(MoodsMedianTest, InvariantUnderJointMonotoneTransforms) {
  Rng rng(10);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> a, b;
    for (int i = 0; i < 25; ++i) a.push_back(std::floor(rng.uniform(0, 20)));
    for (int i = 0; i < 31; ++i) b.push_back(std::floor(rng.uniform(3, 25)));
    const double k = rng.uniform(0.1, 3.0);
    auto f = [k](double v) { return std::exp(k * v / 10.0) + v * v * v; };
    std::vector<double> fa, fb;
    for (double v : a) fa.push_back(f(v));
    for (double v : b) fb.push_back(f(v));
    const auto r0 = moods_median_test(a, b), r1 = moods_median_test(fa, fb);
    ASSERT_EQ(r0.statistic, r1.statistic);
    ASSERT_EQ(r0.p_value, r1.p_value);
  }
}

TEST(MoodsMedianTest, PermutationNullMatchesExactDistribution) {
  const int n = 60;
  const auto p = mood_null::simulate(n, 10000, 77);
  EXPECT_LE(mood_null::ks_discrete(p, mood_null::exact_distribution(n)), 0.02);
  EXPECT_NEAR(mood_null::false_positive_rate(p), 0.05, 0.01);
}

TEST(MoodsMedianTest, PermutationNullPValuesAreUniform) {
  // The p-value is discrete; with 20,000 values per side its largest atom
  // (about 0.008) is small enough for a continuous comparison.
  const auto p = mood_null::simulate(20000, 10000, 78);
  EXPECT_LE(mood_null::ks_uniform(p), 0.02);
}

TEST(MedianCi, RanksForOneHundred) {
  EXPECT_EQ(median_ci_ranks(100, 0.95), (std::pair<std::size_t, std::size_t>{40, 61}));
  std::vector<double> x;
  for (int i = 1; i <= 100; ++i) x.push_back(i);
  const auto ci = median_ci(x);
  EXPECT_EQ(ci.median, 50.0);
  EXPECT_EQ(ci.lo, 40.0);
  EXPECT_EQ(ci.hi, 61.0);
  EXPECT_FALSE(ci.small_sample);
}

TEST(MedianCi, BootstrapPercentileIntervalAgreesWithinOneRank) {
  std::vector<double> x;
  for (int i = 1; i <= 100; ++i) x.push_back(i);
  Rng rng(2);
  std::vector<double> medians;
  std::vector<double> resample(100);
  for (int b = 0; b < 10000; ++b) {
    for (auto& v : resample) v = x[static_cast<std::size_t>(rng.uniform_int(0, 99))];
    std::nth_element(resample.begin(), resample.begin() + 49, resample.end());
    medians.push_back(resample[49]);
  }
  std::sort(medians.begin(), medians.end());
  const double lo = medians[249], hi = medians[9749];
  const auto ci = median_ci(x);
  EXPECT_LE(std::fabs(lo - ci.lo), 1.0);
  EXPECT_LE(std::fabs(hi - ci.hi), 1.0);
}

TEST(MedianCi, ConstantAndSmallSamples) {
  const std::vector<double> c(20, 4.5);
  const auto ci = median_ci(c);
  EXPECT_EQ(ci.lo, 4.5);
  EXPECT_EQ(ci.median, 4.5);
  EXPECT_EQ(ci.hi, 4.5);

  const std::vector<double> small = {3, 1, 2};
  const auto s = median_ci(small);
  EXPECT_TRUE(s.small_sample);
  EXPECT_EQ(s.lo, 1.0);
  EXPECT_EQ(s.hi, 3.0);
  EXPECT_EQ(s.median, 2.0);
  EXPECT_THROW(median_ci(std::vector<double>{}), Error);
}

TEST(MedianCi, EndpointsAreSampleMembersAndWidenWithLevel) {
  const std::vector<double> seven = {7, 1, 6, 2, 5, 3, 4};
  const auto ci = median_ci(seven);
  EXPECT_NE(std::find(seven.begin(), seven.end(), ci.lo), seven.end());
  EXPECT_NE(std::find(seven.begin(), seven.end(), ci.hi), seven.end());

  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x;
    const auto n = rng.uniform_int(6, 400);
    for (std::int64_t i = 0; i < n; ++i) x.push_back(rng.normal());
    double prev_lo = 1e300, prev_hi = -1e300;
    for (double level : {0.5, 0.8, 0.9, 0.95, 0.99}) {
      const auto c = median_ci(x, level);
      ASSERT_NE(std::find(x.begin(), x.end(), c.lo), x.end());
      ASSERT_NE(std::find(x.begin(), x.end(), c.hi), x.end());
      ASSERT_LE(c.lo, prev_lo);
      ASSERT_GE(c.hi, prev_hi);
      prev_lo = c.lo;
      prev_hi = c.hi;
    }
  }
}
