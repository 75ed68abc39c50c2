#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mobjust/calendar.hpp"
#include "mobjust/clustering.hpp"
#include "mobjust/grid_index.hpp"
#include "mobjust/ingest.hpp"
#include "mobjust/staypoint.hpp"

namespace mobjust {

struct HomeParams {
  double max_diameter_m = 50.0;
  double night_start_hour = 21.0;
  double night_end_hour = 6.0;
  std::vector<int> required_days = {0, 1, 2, 3};  // Monday..Thursday nights
};

enum class HomeRejectReason : std::size_t {
  MissingDay,
  InconsistentBlockGroup,
  UnlocatableCentroid,
  kCount,
};

inline std::string_view to_string(HomeRejectReason r) {
  switch (r) {
    case HomeRejectReason::MissingDay: return "MissingDay";
    case HomeRejectReason::InconsistentBlockGroup: return "InconsistentBlockGroup";
    case HomeRejectReason::UnlocatableCentroid: return "UnlocatableCentroid";
    case HomeRejectReason::kCount: break;
  }
  return "Unknown";
}

struct DayEvidence {
  int day = 0;
  std::size_t cluster_id = 0;
  std::int64_t dwell_s = 0;
};

struct HomeAssignment {
  std::string device_id;
  int week = 0;
  std::string block_group_id;
  std::vector<DayEvidence> per_day_evidence;
};

using HomeOutcome = std::variant<HomeAssignment, HomeRejectReason>;

/// Seconds of each cluster's stay points that fall inside `night`.
/// `cluster_of[k]` is the cluster id of stay point k. Clusters with no
/// overlap are absent from the result.
inline std::map<std::size_t, std::int64_t> nightly_dwell(std::span<const StayPoint> stay_points,
                                                         std::span<const std::size_t> cluster_of,
                                                         const TimeWindow& night) {
  std::map<std::size_t, std::int64_t> dwell;
  for (std::size_t k = 0; k < stay_points.size(); ++k) {
    const auto s = overlap_seconds(stay_points[k].t_start, stay_points[k].t_end, night.begin, night.end);
    if (s > 0) dwell[cluster_of[k]] += s;
  }
  return dwell;
}

/// Home block group of one device for one study week. Stay points touching
/// any required night are clustered by complete linkage; each night's home
/// candidate is the cluster with the most dwell in that night (ties: more
/// pings, then lower cluster id). The week yields an assignment only when
/// every required night has a candidate and all candidates fall in the same
/// block group. `stay_points` must be the device's stay points in time order.
inline HomeOutcome assign_week_home(std::string_view device_id,
                                    std::span<const StayPoint> stay_points, int week,
                                    const StudyCalendar& cal, const GridIndex& index,
                                    const HomeParams& params = {}) {
  std::vector<TimeWindow> nights;
  for (int d : params.required_days)
    nights.push_back(cal.night_window(week, d, params.night_start_hour, params.night_end_hour));

  std::vector<StayPoint> night_sps;
  for (const auto& sp : stay_points) {
    const bool touches = std::any_of(nights.begin(), nights.end(), [&](const TimeWindow& w) {
      return overlap_seconds(sp.t_start, sp.t_end, w.begin, w.end) > 0;
    });
    if (touches) night_sps.push_back(sp);
  }
  if (night_sps.empty()) return HomeRejectReason::MissingDay;

  std::vector<GeoPoint> centroids;
  centroids.reserve(night_sps.size());
  for (const auto& sp : night_sps) centroids.push_back(sp.centroid);
  const auto clusters = complete_linkage_cluster(centroids, params.max_diameter_m);

  std::vector<std::size_t> cluster_of(night_sps.size());
  std::vector<std::uint64_t> cluster_pings(clusters.size(), 0);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (auto m : clusters[c].members) {
      cluster_of[m] = c;
      cluster_pings[c] += night_sps[m].n_pings;
    }
  }

  HomeAssignment out;
  out.device_id = std::string(device_id);
  out.week = week;
  std::vector<std::size_t> winners;
  for (std::size_t k = 0; k < nights.size(); ++k) {
    const auto dwell = nightly_dwell(night_sps, cluster_of, nights[k]);
    if (dwell.empty()) return HomeRejectReason::MissingDay;
    auto best = dwell.begin();
    for (auto it = std::next(dwell.begin()); it != dwell.end(); ++it) {
      // Map iteration is by ascending cluster id, so strict comparisons keep the lower id on ties.
      if (it->second > best->second ||
          (it->second == best->second && cluster_pings[it->first] > cluster_pings[best->first]))
        best = it;
    }
    winners.push_back(best->first);
    out.per_day_evidence.push_back({params.required_days[k], best->first, best->second});
  }

  std::optional<std::string_view> home;
  bool consistent = true;
  for (auto c : winners) {
    const auto bg = index.locate(clusters[c].centroid);
    if (!bg) return HomeRejectReason::UnlocatableCentroid;
    if (!home) home = bg;
    else if (*home != *bg) consistent = false;
  }
  if (!consistent) return HomeRejectReason::InconsistentBlockGroup;
  out.block_group_id = std::string(*home);
  return out;
}

/// x_i for one week: distinct devices homed in each block group. Every id in
/// `block_group_ids` is present, zero when nobody is homed there.
inline std::map<std::string, std::int64_t, std::less<>> weekly_home_counts(
    std::span<const HomeAssignment> assignments, int week,
    std::span<const std::string> block_group_ids) {
  std::map<std::string, std::set<std::string_view>, std::less<>> devices;
  for (const auto& id : block_group_ids) devices[id];
  for (const auto& a : assignments) {
    if (a.week == week) devices[a.block_group_id].insert(a.device_id);
  }
  std::map<std::string, std::int64_t, std::less<>> out;
  for (const auto& [id, set] : devices) out[id] = static_cast<std::int64_t>(set.size());
  return out;
}

}  // namespace mobjust
