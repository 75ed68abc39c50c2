#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobjust/calendar.hpp"
#include "mobjust/error.hpp"
#include "mobjust/ingest.hpp"
#include "mobjust/staypoint.hpp"
#include "mobjust/stats.hpp"

namespace mobjust {

/// Reporting partitions: four race classes and two poverty classes.
enum class ClassLabel { White, Black, Hispanic, NoMajority, Poor, NonPoor };

inline constexpr std::array<ClassLabel, 6> kAllClasses = {
    ClassLabel::White, ClassLabel::Black,  ClassLabel::Hispanic,
    ClassLabel::NoMajority, ClassLabel::Poor, ClassLabel::NonPoor};

inline std::string_view to_string(ClassLabel c) {
  switch (c) {
    case ClassLabel::White: return "white";
    case ClassLabel::Black: return "black";
    case ClassLabel::Hispanic: return "hispanic";
    case ClassLabel::NoMajority: return "no_majority";
    case ClassLabel::Poor: return "poor";
    case ClassLabel::NonPoor: return "nonpoor";
  }
  return "?";
}

inline bool in_class(const NeighborhoodClass& nc, ClassLabel c) {
  switch (c) {
    case ClassLabel::White: return nc.race == RaceClass::MajorityWhite;
    case ClassLabel::Black: return nc.race == RaceClass::MajorityBlack;
    case ClassLabel::Hispanic: return nc.race == RaceClass::MajorityHispanic;
    case ClassLabel::NoMajority: return nc.race == RaceClass::NoMajority;
    case ClassLabel::Poor: return nc.poverty == PovertyClass::Poor;
    case ClassLabel::NonPoor: return nc.poverty == PovertyClass::NonPoor;
  }
  return false;
}

/// p_i = x_i / N_i.
inline double representativeness(std::int64_t x, std::int64_t population) {
  if (population <= 0) throw Error(ErrorKind::ZeroPopulation, "representativeness: N_i must be positive");
  return static_cast<double>(x) / static_cast<double>(population);
}

struct UnitCount {
  std::string id;
  std::int64_t x = 0;           // homed devices
  std::int64_t population = 0;  // census N
};

/// p for every classifiable block group of class `c`, ordered by id.
/// `counts` maps block-group id to x_i for the week; missing ids count as 0.
inline std::vector<double> class_representativeness(
    const std::map<std::string, std::int64_t, std::less<>>& counts,
    std::span<const BlockGroup> block_groups, ClassLabel c) {
  std::vector<const BlockGroup*> members;
  for (const auto& bg : block_groups) {
    if (bg.neighborhood && bg.pop_total > 0 && in_class(*bg.neighborhood, c)) members.push_back(&bg);
  }
  std::sort(members.begin(), members.end(),
            [](const BlockGroup* a, const BlockGroup* b) { return a->id < b->id; });
  std::vector<double> out;
  out.reserve(members.size());
  for (const auto* bg : members) {
    auto it = counts.find(bg->id);
    out.push_back(representativeness(it == counts.end() ? 0 : it->second, bg->pop_total));
  }
  return out;
}

struct Quantity {
  double q_h = 0.0;   // mean distinct local clock-hours per day with a stay point
  std::int64_t q_sp = 0;
};

/// Quantity measures for one device-week. `stay_points` are the device's stay
/// points starting inside the week. Each interval is clipped to each local
/// day of the week and every clock hour it overlaps counts once per day.
inline Quantity device_week_quantity(std::span<const StayPoint> stay_points,
                                     const StudyCalendar& cal, int week) {
  Quantity q;
  q.q_sp = static_cast<std::int64_t>(stay_points.size());
  std::int64_t hours = 0;
  for (int d = 0; d < 7; ++d) {
    const auto day = cal.day_window(week, d);
    std::array<bool, 24> touched{};
    for (const auto& sp : stay_points) {
      const auto lo = std::max(sp.t_start, day.begin);
      const auto hi = std::min(sp.t_end, day.end);
      if (hi <= lo) continue;
      const auto h0 = (lo - day.begin) / kSecondsPerHour;
      const auto h1 = (hi - 1 - day.begin) / kSecondsPerHour;
      for (auto h = h0; h <= h1; ++h) touched[static_cast<std::size_t>(h)] = true;
    }
    hours += std::count(touched.begin(), touched.end(), true);
  }
  q.q_h = static_cast<double>(hours) / 7.0;
  return q;
}

/// Lower median of a device-week's ping precision values.
inline double device_week_precision(std::span<const double> precisions) {
  if (precisions.empty()) throw Error(ErrorKind::NoPings, "device_week_precision: no pings");
  return lower_median(std::vector<double>(precisions.begin(), precisions.end()));
}

/// Sums block-group units into tracts (first 11 characters of the id).
inline std::vector<UnitCount> aggregate_tracts(std::span<const UnitCount> block_groups) {
  std::map<std::string, UnitCount, std::less<>> tracts;
  for (const auto& u : block_groups) {
    const auto tract = u.id.substr(0, 11);
    auto& t = tracts[tract];
    t.id = tract;
    t.x += u.x;
    t.population += u.population;
  }
  std::vector<UnitCount> out;
  for (auto& [id, t] : tracts) out.push_back(std::move(t));
  return out;
}

/// Pearson r between homed devices and census population across units.
inline stats::TestResult census_correlation(std::span<const UnitCount> units) {
  if (units.size() < 3) throw Error(ErrorKind::InsufficientUnits, "census_correlation: need >= 3 units");
  std::vector<double> x, n;
  x.reserve(units.size());
  n.reserve(units.size());
  for (const auto& u : units) {
    x.push_back(static_cast<double>(u.x));
    n.push_back(static_cast<double>(u.population));
  }
  return stats::pearson(x, n);
}

struct QuantileBins {
  std::vector<double> edges;  // k + 1 values: min, inner cut points, max
  std::vector<int> bin;       // 1-based bin of each input value
};

/// Equal-frequency bins. Cut point j is the value at rank ceil(j * n / k);
/// a value equal to a cut point goes to the lower bin.
inline QuantileBins quantile_bins(std::span<const double> values, int k = 8) {
  if (values.empty()) throw Error(ErrorKind::EmptySample, "quantile_bins: no values");
  if (k < 1) throw Error(ErrorKind::InvalidConfig, "quantile_bins: k must be >= 1");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<std::int64_t>(sorted.size());
  QuantileBins out;
  out.edges.push_back(sorted.front());
  for (int j = 1; j < k; ++j) {
    const auto rank = (static_cast<std::int64_t>(j) * n + k - 1) / k;  // ceil
    out.edges.push_back(sorted[static_cast<std::size_t>(std::max<std::int64_t>(rank, 1) - 1)]);
  }
  out.edges.push_back(sorted.back());
  out.bin.reserve(values.size());
  for (double v : values) {
    // First inner cut point >= v.
    auto it = std::lower_bound(out.edges.begin() + 1, out.edges.end() - 1, v);
    out.bin.push_back(static_cast<int>(it - (out.edges.begin() + 1)) + 1);
  }
  return out;
}

}  // namespace mobjust
