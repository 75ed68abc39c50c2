#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "mobjust/rng.hpp"
#include "mobjust/staypoint.hpp"
#include "oracles.hpp"

using namespace mobjust;

namespace {

const GeoPoint kHome{29.75, -95.37};

PingRecord ping(std::int64_t t, GeoPoint p, double prec = 10.0) { return {"dev", p, t, prec}; }

std::vector<PingRecord> random_trajectory(Rng& rng, std::size_t n) {
  std::vector<PingRecord> out;
  std::int64_t t = 0;
  GeoPoint here = kHome;
  for (std::size_t i = 0; i < n; ++i) {
    t += rng.uniform_int(30, 600);
    const double u = rng.uniform();
    if (u < 0.15) here = offset_meters(here, rng.uniform(-400, 400), rng.uniform(-400, 400));
    const auto p = offset_meters(here, rng.uniform(-35, 35), rng.uniform(-35, 35));
    out.push_back(ping(t, p, rng.uniform(3, 60)));
  }
  return out;
}

}  // namespace

TEST(StayPoints, FivePingsAtOnePlace) {
  std::vector<PingRecord> pings;
  for (std::int64_t t : {0, 300, 600, 900, 1200}) pings.push_back(ping(t, kHome));
  const auto sps = detect_stay_points(pings);
  ASSERT_EQ(sps.size(), 1u);
  EXPECT_EQ(sps[0].t_start, 0);
  EXPECT_EQ(sps[0].t_end, 1200);
  EXPECT_EQ(sps[0].n_pings, 5u);
  EXPECT_NEAR(haversine_distance(sps[0].centroid, kHome), 0.0, 1e-6);
}

TEST(StayPoints, ConstantMotionYieldsNothing) {
  std::vector<PingRecord> pings;
  for (int i = 0; i < 30; ++i) pings.push_back(ping(300 * i, offset_meters(kHome, 100.0 * i, 0)));
  EXPECT_TRUE(detect_stay_points(pings).empty());
}

TEST(StayPoints, TwoEpisodesSeparatedByAJump) {
  std::vector<PingRecord> pings;
  const auto far = offset_meters(kHome, 5000, 0);
  for (int i = 0; i <= 5; ++i) pings.push_back(ping(300 * i, kHome));
  for (int i = 0; i <= 5; ++i) pings.push_back(ping(3600 + 300 * i, far));
  const auto sps = detect_stay_points(pings);
  ASSERT_EQ(sps.size(), 2u);
  EXPECT_EQ(sps[0].duration(), 1500);
  EXPECT_EQ(sps[1].duration(), 1500);
  EXPECT_EQ(oracle::stay_windows(pings, {}).size(), 2u);
}

TEST(StayPoints, DurationBoundaryIsInclusive) {
  const std::vector<PingRecord> exact = {ping(0, kHome), ping(900, kHome)};
  EXPECT_EQ(detect_stay_points(exact).size(), 1u);
  const std::vector<PingRecord> short_by_one = {ping(0, kHome), ping(899, kHome)};
  EXPECT_TRUE(detect_stay_points(short_by_one).empty());
}

TEST(StayPoints, MedianPrecisionIsLowerMedian) {
  const std::vector<PingRecord> pings = {ping(0, kHome, 40), ping(600, kHome, 10), ping(1200, kHome, 30),
                                         ping(1800, kHome, 20)};
  const auto sps = detect_stay_points(pings);
  ASSERT_EQ(sps.size(), 1u);
  EXPECT_EQ(sps[0].median_precision_m, 20.0);
}

TEST(StayPoints, MatchBruteForceOracleOnRandomTrajectories) {
  Rng rng(1234);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto pings = random_trajectory(rng, static_cast<std::size_t>(rng.uniform_int(0, 20)));
    const auto sps = detect_stay_points(pings);
    const auto want = oracle::stay_windows(pings, {});
    ASSERT_EQ(sps.size(), want.size()) << "trial " << trial;
    for (std::size_t k = 0; k < sps.size(); ++k) {
      ASSERT_EQ(sps[k].t_start, pings[want[k].first].t);
      ASSERT_EQ(sps[k].t_end, pings[want[k].last].t);
      ASSERT_EQ(sps[k].n_pings, want[k].last - want[k].first + 1);
    }
  }
}

TEST(StayPoints, EveryStayPointSatisfiesBothCriteriaAndPingsAreNotShared) {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto pings = random_trajectory(rng, 200);
    const auto sps = detect_stay_points(pings);
    std::set<std::int64_t> used;
    for (const auto& sp : sps) {
      ASSERT_GE(sp.duration(), 900);
      std::size_t first = 0;
      while (pings[first].t != sp.t_start) ++first;
      for (std::size_t k = first; k < first + sp.n_pings; ++k) {
        ASSERT_LE(haversine_distance(pings[first].point, pings[k].point), 50.0);
        ASSERT_TRUE(used.insert(pings[k].t).second) << "ping in two stay points";
      }
    }
  }
}

TEST(StayPoints, DensifyingADwellNeverRemovesIt) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PingRecord> pings;
    std::int64_t t = 0;
    GeoPoint here = kHome;
    // Travel, dwell, travel.
    for (int i = 0; i < 4; ++i, t += 300) pings.push_back(ping(t, offset_meters(kHome, -2000 + 300.0 * i, 0)));
    const auto dwell_start = t;
    const auto dwell_len = rng.uniform_int(900, 5400);
    for (; t < dwell_start + dwell_len; t += 600) pings.push_back(ping(t, offset_meters(here, rng.uniform(-20, 20), 0)));
    t = dwell_start + dwell_len;
    pings.push_back(ping(t, offset_meters(here, rng.uniform(-20, 20), 0)));
    t += 300;
    for (int i = 1; i <= 4; ++i, t += 300) pings.push_back(ping(t, offset_meters(kHome, 500.0 * i, 0)));
    const auto base = detect_stay_points(pings);
    ASSERT_EQ(base.size(), 1u);

    auto dense = pings;
    for (const auto& p : pings)
      if (p.t > dwell_start && p.t <= dwell_start + dwell_len)
        dense.push_back(ping(p.t - 300, offset_meters(here, rng.uniform(-20, 20), 0)));
    std::sort(dense.begin(), dense.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    const auto after = detect_stay_points(dense);
    bool covered = false;
    for (const auto& sp : after) covered |= sp.t_start <= base[0].t_start + 300 && sp.t_end >= base[0].t_end;
    ASSERT_TRUE(covered) << "trial " << trial;
  }
}

TEST(StayPoints, BlockGroupLookupUsesTheCentroid) {
  Polygon a, b;
  a.exterior = {{29.0, -96.0}, {29.0, -95.0}, {30.0, -95.0}, {30.0, -96.0}, {29.0, -96.0}};
  b.exterior = {{29.0, -95.0}, {29.0, -94.0}, {30.0, -94.0}, {30.0, -95.0}, {29.0, -95.0}};
  const GridIndex idx({{"B", {b}}, {"A", {a}}}, 0.25);
  StayPoint sp;
  sp.centroid = {29.5, -95.5};
  EXPECT_EQ(staypoint_block_group(sp, idx), std::optional<std::string>("A"));
  sp.centroid = {29.5, -95.0};
  EXPECT_EQ(staypoint_block_group(sp, idx), std::optional<std::string>("A"));
  sp.centroid = {10.0, 10.0};
  EXPECT_FALSE(staypoint_block_group(sp, idx).has_value());
}

TEST(StayPoints, CsvRoundTrip) {
  StayPoint sp{"dev", {29.75, -95.37}, 100, 2000, 7, 12.5, std::string("482010001001")};
  StayPoint unlocated{"dev", {1.5, 2.25}, 3000, 4000, 2, 8, std::nullopt};
  std::stringstream io;
  io << kStayPointHeader << '\n';
  write_stay_point(io, sp);
  write_stay_point(io, unlocated);
  const auto back = read_stay_points(io);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].centroid, sp.centroid);
  EXPECT_EQ(back[0].block_group_id, sp.block_group_id);
  EXPECT_EQ(back[0].n_pings, 7u);
  EXPECT_EQ(back[0].median_precision_m, 12.5);
  EXPECT_FALSE(back[1].block_group_id.has_value());
}
