#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mobjust/calendar.hpp"
#include "mobjust/csv.hpp"
#include "mobjust/error.hpp"
#include "mobjust/format.hpp"
#include "mobjust/geo.hpp"
#include "mobjust/ingest.hpp"
#include "mobjust/rng.hpp"

namespace mobjust::synth {

/// Injected disruption over whole study weeks.
struct Disruption {
  std::vector<int> weeks;
  double contraction = 1.0;  // expected weekly stay-visit count multiplier, <= 1
  double inflation = 1.0;    // precision multiplier, >= 1
  double dropout = 0.0;      // per-ping drop probability

  bool covers(int week) const { return std::find(weeks.begin(), weeks.end(), week) != weeks.end(); }
};

struct SynthConfig {
  std::uint64_t seed = 42;
  std::string start_date = "2017-07-31";
  int weeks = 9;
  std::int64_t utc_offset_s = -5 * kSecondsPerHour;

  // Geography: a grid of square block groups, race classes shuffled over it.
  GeoPoint origin{29.70, -95.45};
  double block_group_deg = 0.01;
  int block_groups_per_tract = 4;
  std::array<int, 4> block_groups_per_class{20, 20, 20, 0};  // white, black, hispanic, none
  std::int64_t pop_min = 800;
  std::int64_t pop_max = 2000;
  double tract_population_share = 0.5;  // weight of a per-tract draw in each block group's population
  std::array<double, 4> poor_probability{0.2, 0.6, 0.5, 0.4};

  // Device ownership (true p) per race class.
  std::array<double, 4> ownership_rate{0.08, 0.04, 0.04, 0.05};

  // Routine.
  int anchors_min = 1;
  int anchors_max = 5;
  int visits_min = 3;
  int visits_max = 6;
  double ping_interval_s = 300.0;
  double noise_sigma_m = 10.0;
  double precision_median_m = 20.0;
  double precision_log_sigma = 0.4;
  double home_margin_m = 150.0;
  double violation_fraction = 0.1;  // per device-week, split evenly between the two rule breaks

  Disruption disruption;
};

inline void validate(const SynthConfig& c) {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidConfig, "synth: " + m); };
  if (c.weeks < 1) bad("weeks must be >= 1");
  if (!(c.block_group_deg > 0.0)) bad("block_group_deg must be positive");
  if (c.block_groups_per_tract < 1 || c.block_groups_per_tract > 9) bad("block_groups_per_tract must be 1..9");
  int total = 0;
  for (int n : c.block_groups_per_class) {
    if (n < 0) bad("negative block-group count");
    total += n;
  }
  if (total < 2) bad("need at least two block groups");
  if (c.pop_min < 1 || c.pop_max < c.pop_min) bad("population range");
  if (!(c.tract_population_share >= 0.0 && c.tract_population_share <= 1.0)) bad("tract population share");
  for (double r : c.ownership_rate)
    if (!(r >= 0.0 && r <= 1.0)) bad("ownership rates must be in [0,1]");
  for (double r : c.poor_probability)
    if (!(r >= 0.0 && r <= 1.0)) bad("poor probabilities must be in [0,1]");
  if (c.anchors_min < 1 || c.anchors_max < c.anchors_min) bad("anchor range");
  if (c.visits_min < 1 || c.visits_max < c.visits_min || c.visits_max > 8) bad("visit range must lie in 1..8");
  if (!(c.ping_interval_s > 0.0)) bad("ping interval must be positive");
  if (!(c.noise_sigma_m >= 0.0)) bad("noise sigma must be >= 0");
  if (!(c.precision_median_m > 0.0) || !(c.precision_log_sigma >= 0.0)) bad("precision distribution");
  if (!(c.violation_fraction >= 0.0 && c.violation_fraction <= 1.0)) bad("violation fraction");
  const auto& d = c.disruption;
  if (!(d.contraction > 0.0 && d.contraction <= 1.0)) bad("contraction must be in (0,1]");
  if (!(d.inflation >= 1.0)) bad("inflation must be >= 1");
  if (!(d.dropout >= 0.0 && d.dropout <= 1.0)) bad("dropout must be in [0,1]");
  for (int w : d.weeks)
    if (w < 1 || w > c.weeks) bad("disruption week outside study");
}

enum class VisitKind { Home, AltHome, Daytime, Transit };

struct PingSample {
  GeoPoint point;
  std::int64_t t = 0;
  double precision_m = 0.0;

  friend bool operator==(const PingSample&, const PingSample&) = default;
};

struct Visit {
  VisitKind kind = VisitKind::Transit;
  GeoPoint location;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  std::vector<PingSample> pings;

  bool is_stay() const { return kind != VisitKind::Transit; }
  friend bool operator==(const Visit&, const Visit&) = default;
};

struct DeviceSchedule {
  std::string device_id;
  std::vector<Visit> visits;  // time-ordered

  friend bool operator==(const DeviceSchedule&, const DeviceSchedule&) = default;
};

enum class Expected { Assigned, MissingDay, InconsistentBlockGroup, Uncertain };

inline std::string_view to_string(Expected e) {
  switch (e) {
    case Expected::Assigned: return "Assigned";
    case Expected::MissingDay: return "MissingDay";
    case Expected::InconsistentBlockGroup: return "InconsistentBlockGroup";
    case Expected::Uncertain: return "Uncertain";
  }
  return "?";
}

struct DeviceTruth {
  std::string id;
  std::size_t home_bg = 0;  // index into block_groups()
  GeoPoint home;
  std::size_t alt_bg = 0;
  GeoPoint alt_home;
  NeighborhoodClass neighborhood;
  std::vector<GeoPoint> anchors;
  int visits_per_day = 0;
  std::vector<Expected> outcome;   // per week, index week - 1
  std::vector<int> missing_night;  // per week, weekday of the skipped night or -1
};

struct ClassTruth {
  RaceClass race;
  double ownership_rate = 0.0;
  std::int64_t block_groups = 0;
  std::int64_t population = 0;
  std::int64_t devices = 0;
};

struct WeekTruth {
  int week = 0;
  bool disrupted = false;
  double q_sp_scale = 1.0;
  double precision_median_m = 0.0;
};

struct TruthManifest {
  std::vector<const DeviceTruth*> devices;
  std::vector<ClassTruth> classes;
  std::vector<WeekTruth> weeks;
};

/// Thins daytime visits, inflates precision and drops pings inside the
/// disrupted weeks. Per week, a device keeps c * (H + D) - H of its D
/// daytime visits (stochastically rounded, chosen uniformly), where H counts
/// the week's home visits, so its stay-visit count scales by the contraction c.
inline DeviceSchedule perturb_timeline(DeviceSchedule schedule, const Disruption& disruption,
                                       const StudyCalendar& cal, Rng& rng) {
  if (disruption.weeks.empty()) return schedule;
  for (int w : disruption.weeks) {
    const auto win = cal.week_window(w);
    std::vector<std::size_t> daytime;
    double home = 0.0;
    for (std::size_t i = 0; i < schedule.visits.size(); ++i) {
      const auto& v = schedule.visits[i];
      if (!win.contains(v.t_start)) continue;
      if (v.kind == VisitKind::Daytime) daytime.push_back(i);
      else if (v.kind != VisitKind::Transit) home += 1.0;
    }
    if (daytime.empty()) continue;
    const double day = static_cast<double>(daytime.size());
    const double target = std::clamp(disruption.contraction * (home + day) - home, 0.0, day);
    auto keep = static_cast<std::size_t>(target);
    if (rng.bernoulli(target - static_cast<double>(keep))) ++keep;
    keep = std::min(keep, daytime.size());
    for (std::size_t i = 0; i < keep; ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                              static_cast<std::int64_t>(daytime.size() - 1)));
      std::swap(daytime[i], daytime[j]);
    }
    std::vector<bool> drop(schedule.visits.size(), false);
    for (std::size_t i = keep; i < daytime.size(); ++i) drop[daytime[i]] = true;
    std::vector<Visit> kept;
    kept.reserve(schedule.visits.size());
    for (std::size_t i = 0; i < schedule.visits.size(); ++i)
      if (!drop[i]) kept.push_back(std::move(schedule.visits[i]));
    schedule.visits = std::move(kept);
  }
  for (auto& v : schedule.visits) {
    std::vector<PingSample> pings;
    pings.reserve(v.pings.size());
    for (auto& p : v.pings) {
      const auto week = cal.week_of(p.t);
      if (week && disruption.covers(*week)) {
        if (disruption.dropout > 0.0 && rng.bernoulli(disruption.dropout)) continue;
        p.precision_m *= disruption.inflation;
      }
      pings.push_back(p);
    }
    v.pings = std::move(pings);
  }
  return schedule;
}

/// Seeded synthetic population. Block groups and device truth are built
/// eagerly; each device's pings are a pure function of (config, device
/// index), so devices can be rendered on demand and in any order.
class Generator {
 public:
  explicit Generator(SynthConfig config)
      : cfg_(std::move(config)),
        cal_((validate(cfg_), cfg_.start_date), cfg_.weeks, cfg_.utc_offset_s) {
    build_geography();
    build_devices();
  }

  const SynthConfig& config() const { return cfg_; }
  const StudyCalendar& calendar() const { return cal_; }
  const std::vector<BlockGroup>& block_groups() const { return bgs_; }
  const std::vector<DeviceTruth>& devices() const { return devices_; }

  /// Routine with rendered pings, before any disruption.
  DeviceSchedule base_schedule(std::size_t i) const {
    const auto& dev = devices_[i];
    Rng rng = Rng::derive(cfg_.seed, 4 * i + 1);
    DeviceSchedule out;
    out.device_id = dev.id;
    const int days = 7 * cfg_.weeks;
    const auto study_end = cal_.study_window().end;

    std::vector<std::int64_t> leave(static_cast<std::size_t>(days) + 1);
    std::vector<std::int64_t> arrive(static_cast<std::size_t>(days));
    for (int g = 0; g <= days; ++g) {
      const auto d0 = cal_.start_utc() + g * kSecondsPerDay;
      leave[static_cast<std::size_t>(g)] = d0 + static_cast<std::int64_t>(rng.uniform(6.75, 7.5) * kSecondsPerHour);
      if (g < days)
        arrive[static_cast<std::size_t>(g)] = d0 + static_cast<std::int64_t>(rng.uniform(20.0, 20.75) * kSecondsPerHour);
    }

    std::vector<Visit> stays;
    stays.push_back({VisitKind::Home, dev.home, cal_.start_utc(), leave[0], {}});
    const int v = dev.visits_per_day;
    const auto n_anchors = static_cast<int>(dev.anchors.size());
    for (int g = 0; g < days; ++g) {
      const auto gs = static_cast<std::size_t>(g);
      const double slot = static_cast<double>(arrive[gs] - leave[gs]) / v;
      for (int k = 0; k < v; ++k) {
        const auto s = leave[gs] + static_cast<std::int64_t>((k + rng.uniform(0.10, 0.25)) * slot);
        const auto e = s + static_cast<std::int64_t>(rng.uniform(0.55, 0.70) * slot);
        stays.push_back({VisitKind::Daytime, dev.anchors[static_cast<std::size_t>((g * v + k) % n_anchors)], s, e, {}});
      }
      const int week = g / 7 + 1;
      const int weekday = g % 7;
      const auto ws = static_cast<std::size_t>(week - 1);
      if (dev.missing_night[ws] == weekday) continue;
      const bool alt = dev.outcome[ws] == Expected::InconsistentBlockGroup && (weekday == 2 || weekday == 3);
      const auto end = g + 1 < days ? leave[gs + 1] : study_end - 1;
      stays.push_back({alt ? VisitKind::AltHome : VisitKind::Home, alt ? dev.alt_home : dev.home,
                       arrive[gs], end, {}});
    }

    for (std::size_t k = 0; k < stays.size(); ++k) {
      render(stays[k], rng);
      out.visits.push_back(std::move(stays[k]));
      if (k + 1 < stays.size()) {
        const auto& prev = out.visits.back();
        const auto& next = stays[k + 1];
        const auto gap = next.t_start - prev.t_end;
        if (gap < 2) continue;
        const auto t = prev.t_end + std::min<std::int64_t>(600, gap / 2);
        const GeoPoint where = transit_point(prev.location, next.location, rng);
        Visit transit{VisitKind::Transit, where, t, t, {}};
        transit.pings.push_back({jitter(where, rng), t, draw_precision(rng)});
        out.visits.push_back(std::move(transit));
      }
    }
    return out;
  }

  DeviceSchedule schedule(std::size_t i) const {
    Rng rng = Rng::derive(cfg_.seed, 4 * i + 2);
    return perturb_timeline(base_schedule(i), cfg_.disruption, cal_, rng);
  }

  std::vector<PingRecord> pings(std::size_t i) const { return flatten(schedule(i)); }

  static std::vector<PingRecord> flatten(const DeviceSchedule& s) {
    std::vector<PingRecord> out;
    for (const auto& v : s.visits)
      for (const auto& p : v.pings) out.push_back({s.device_id, p.point, p.t, p.precision_m});
    std::stable_sort(out.begin(), out.end(),
                     [](const PingRecord& a, const PingRecord& b) { return a.t < b.t; });
    return out;
  }

  TruthManifest manifest() const {
    TruthManifest m;
    for (const auto& d : devices_) m.devices.push_back(&d);
    for (std::size_t r = 0; r < 4; ++r) {
      ClassTruth c;
      c.race = static_cast<RaceClass>(r);
      c.ownership_rate = cfg_.ownership_rate[r];
      for (const auto& bg : bgs_) {
        if (bg.neighborhood->race != c.race) continue;
        ++c.block_groups;
        c.population += bg.pop_total;
      }
      for (const auto& d : devices_) c.devices += d.neighborhood.race == c.race ? 1 : 0;
      m.classes.push_back(c);
    }
    for (int w = 1; w <= cfg_.weeks; ++w) {
      WeekTruth t;
      t.week = w;
      t.disrupted = cfg_.disruption.covers(w);
      t.q_sp_scale = t.disrupted ? cfg_.disruption.contraction : 1.0;
      t.precision_median_m = cfg_.precision_median_m * (t.disrupted ? cfg_.disruption.inflation : 1.0);
      m.weeks.push_back(t);
    }
    return m;
  }

 private:
  static constexpr std::size_t kRaceIndex(RaceClass r) { return static_cast<std::size_t>(r); }

  void build_geography() {
    Rng rng = Rng::derive(cfg_.seed, 0xB10C);
    std::vector<RaceClass> classes;
    for (std::size_t r = 0; r < 4; ++r)
      for (int k = 0; k < cfg_.block_groups_per_class[r]; ++k) classes.push_back(static_cast<RaceClass>(r));
    for (std::size_t k = classes.size(); k > 1; --k)  // Fisher-Yates
      std::swap(classes[k - 1], classes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1))]);

    const auto total = classes.size();
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(total))));
    const double s = cfg_.block_group_deg;
    const auto per_tract = static_cast<std::size_t>(cfg_.block_groups_per_tract);
    double tract_u = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
      if (i % per_tract == 0) tract_u = rng.uniform();
      BlockGroup bg;
      char id[48];
      std::snprintf(id, sizeof(id), "48201%06zu%zu", (i / per_tract + 1) * 100, i % per_tract + 1);
      bg.id = id;
      const double lat0 = cfg_.origin.lat + static_cast<double>(i / cols) * s;
      const double lon0 = cfg_.origin.lon + static_cast<double>(i % cols) * s;
      Polygon poly;
      poly.exterior = {{lat0, lon0}, {lat0, lon0 + s}, {lat0 + s, lon0 + s}, {lat0 + s, lon0}, {lat0, lon0}};
      bg.geometry = {poly};

      const auto race = classes[i];
      const double mix = cfg_.tract_population_share * tract_u + (1.0 - cfg_.tract_population_share) * rng.uniform();
      const auto n = std::min(cfg_.pop_max, cfg_.pop_min + static_cast<std::int64_t>(
                                                            mix * static_cast<double>(cfg_.pop_max - cfg_.pop_min + 1)));
      std::array<double, 3> share{};
      if (race == RaceClass::NoMajority) {
        share = {rng.uniform(0.30, 0.45), rng.uniform(0.20, 0.30), rng.uniform(0.15, 0.25)};
      } else {
        const auto dom = kRaceIndex(race);
        share[dom] = rng.uniform(0.55, 0.85);
        const double rest = (1.0 - share[dom]) * rng.uniform(0.7, 0.95);
        const double split = rng.uniform(0.2, 0.8);
        share[(dom + 1) % 3] = rest * split;
        share[(dom + 2) % 3] = rest * (1.0 - split);
      }
      bg.pop_total = n;
      bg.pop_white = static_cast<std::int64_t>(std::floor(share[0] * static_cast<double>(n)));
      bg.pop_black = static_cast<std::int64_t>(std::floor(share[1] * static_cast<double>(n)));
      bg.pop_hispanic = static_cast<std::int64_t>(std::floor(share[2] * static_cast<double>(n)));
      const bool poor = rng.bernoulli(cfg_.poor_probability[kRaceIndex(race)]);
      bg.poverty_share = poor ? rng.uniform(0.31, 0.60) : rng.uniform(0.02, 0.29);
      // Round-trip through the text form so the in-memory value equals what
      // load_block_groups reads back.
      bg.poverty_share = *parse_double(format_double(bg.poverty_share));
      bg.neighborhood = classify(bg.pop_total, bg.pop_white, bg.pop_black, bg.pop_hispanic, bg.poverty_share);
      bgs_.push_back(std::move(bg));
    }
  }

  GeoPoint inset_point(std::size_t bg, Rng& rng) const {
    const auto& ring = bgs_[bg].geometry.front().exterior;
    const double lat0 = ring[0].lat, lon0 = ring[0].lon, s = cfg_.block_group_deg;
    const double mlat = cfg_.home_margin_m / (kEarthRadiusM * std::numbers::pi / 180.0);
    const double mlon = mlat / std::cos(deg_to_rad(lat0));
    return {rng.uniform(lat0 + mlat, lat0 + s - mlat), rng.uniform(lon0 + mlon, lon0 + s - mlon)};
  }

  void build_devices() {
    Rng pop_rng = Rng::derive(cfg_.seed, 0xD3F1);
    std::size_t next_id = 0;
    const auto& b = bgs_;
    const double rlat0 = cfg_.origin.lat, rlon0 = cfg_.origin.lon;
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(b.size()))));
    const auto rows = (b.size() + cols - 1) / cols;
    const double rlat1 = rlat0 + static_cast<double>(rows) * cfg_.block_group_deg;
    const double rlon1 = rlon0 + static_cast<double>(cols) * cfg_.block_group_deg;

    for (std::size_t k = 0; k < b.size(); ++k) {
      const auto race = b[k].neighborhood->race;
      const auto count = pop_rng.binomial(b[k].pop_total, cfg_.ownership_rate[kRaceIndex(race)]);
      for (std::int64_t c = 0; c < count; ++c) {
        const std::size_t i = next_id++;
        Rng rng = Rng::derive(cfg_.seed, 4 * i);
        DeviceTruth d;
        char id[48];
        std::snprintf(id, sizeof(id), "dev%07zu", i);
        d.id = id;
        d.home_bg = k;
        d.neighborhood = *b[k].neighborhood;
        d.home = inset_point(k, rng);
        d.alt_bg = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(b.size()) - 2));
        if (d.alt_bg >= k) ++d.alt_bg;
        d.alt_home = inset_point(d.alt_bg, rng);
        const auto n_anchors = rng.uniform_int(cfg_.anchors_min, cfg_.anchors_max);
        for (std::int64_t a = 0; a < n_anchors; ++a) {
          GeoPoint p;
          for (int attempt = 0; attempt < 100; ++attempt) {
            p = {rng.uniform(rlat0, rlat1), rng.uniform(rlon0, rlon1)};
            bool clear = haversine_distance(p, d.home) > 300.0 && haversine_distance(p, d.alt_home) > 300.0;
            for (const auto& q : d.anchors) clear = clear && haversine_distance(p, q) > 300.0;
            if (clear) break;
          }
          d.anchors.push_back(p);
        }
        d.visits_per_day = static_cast<int>(rng.uniform_int(cfg_.visits_min, cfg_.visits_max));
        for (int w = 1; w <= cfg_.weeks; ++w) {
          const double u = rng.uniform();
          int missing = -1;
          Expected e = Expected::Assigned;
          if (u < cfg_.violation_fraction / 2.0) {
            e = Expected::MissingDay;
            missing = static_cast<int>(rng.uniform_int(0, 3));
          } else if (u < cfg_.violation_fraction) {
            e = Expected::InconsistentBlockGroup;
          }
          if (cfg_.disruption.covers(w) && cfg_.disruption.dropout > 0.0) e = Expected::Uncertain;
          d.outcome.push_back(e);
          d.missing_night.push_back(missing);
        }
        devices_.push_back(std::move(d));
      }
    }
  }

  GeoPoint jitter(const GeoPoint& p, Rng& rng) const {
    if (cfg_.noise_sigma_m == 0.0) return p;
    const double north = cfg_.noise_sigma_m * rng.normal();
    const double east = cfg_.noise_sigma_m * rng.normal();
    return offset_meters(p, north, east);
  }

  double draw_precision(Rng& rng) const {
    const double v = cfg_.precision_median_m * std::exp(cfg_.precision_log_sigma * rng.normal());
    return *parse_double(format_fixed(v, 2));
  }

  // A point at least 500 m from both ends of the hop.
  GeoPoint transit_point(const GeoPoint& from, const GeoPoint& to, Rng& rng) const {
    for (int attempt = 0;; ++attempt) {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double dist = rng.uniform(600.0, 1200.0);
      const GeoPoint p = offset_meters(from, dist * std::cos(angle), dist * std::sin(angle));
      if (haversine_distance(p, to) >= 500.0 || attempt > 50) return p;
    }
  }

  void render(Visit& v, Rng& rng) const {
    auto t = v.t_start;
    const auto last = v.t_end;
    while (t < last) {
      v.pings.push_back({jitter(v.location, rng), t, draw_precision(rng)});
      t += std::max<std::int64_t>(1, static_cast<std::int64_t>(rng.exponential(cfg_.ping_interval_s)));
    }
    v.pings.push_back({jitter(v.location, rng), last, draw_precision(rng)});
  }

  SynthConfig cfg_;
  StudyCalendar cal_;
  std::vector<BlockGroup> bgs_;
  std::vector<DeviceTruth> devices_;
};

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline void write_manifest_devices(std::ostream& out, const Generator& gen) {
  out << "device_id,home_block_group_id,race_class,poverty_class,alt_block_group_id,anchors,visits_per_day\n";
  for (const auto& d : gen.devices()) {
    out << d.id << ',' << gen.block_groups()[d.home_bg].id << ',' << to_string(d.neighborhood.race) << ','
        << to_string(d.neighborhood.poverty) << ',' << gen.block_groups()[d.alt_bg].id << ','
        << d.anchors.size() << ',' << d.visits_per_day << '\n';
  }
}

inline void write_manifest_outcomes(std::ostream& out, const Generator& gen) {
  out << "device_id,week,expected,block_group_id\n";
  for (const auto& d : gen.devices()) {
    for (std::size_t w = 0; w < d.outcome.size(); ++w) {
      out << d.id << ',' << w + 1 << ',' << to_string(d.outcome[w]) << ','
          << (d.outcome[w] == Expected::Assigned ? gen.block_groups()[d.home_bg].id : std::string())
          << '\n';
    }
  }
}

inline void write_manifest_classes(std::ostream& out, const TruthManifest& m) {
  out << "race_class,ownership_rate,block_groups,population,devices\n";
  for (const auto& c : m.classes) {
    out << to_string(c.race) << ',' << format_double(c.ownership_rate) << ',' << c.block_groups << ','
        << c.population << ',' << c.devices << '\n';
  }
}

inline void write_manifest_weeks(std::ostream& out, const TruthManifest& m) {
  out << "week,disrupted,q_sp_scale,precision_median_m\n";
  for (const auto& w : m.weeks) {
    out << w.week << ',' << (w.disrupted ? 1 : 0) << ',' << format_double(w.q_sp_scale) << ','
        << format_double(w.precision_median_m) << '\n';
  }
}

/// Writes the ping stream (device order, then time order).
inline void write_pings(std::ostream& out, const Generator& gen) {
  write_ping_header(out);
  for (std::size_t i = 0; i < gen.devices().size(); ++i)
    for (const auto& p : gen.pings(i)) write_ping(out, p);
}

struct SynthPaths {
  std::filesystem::path pings, block_groups, manifest_devices, manifest_outcomes, manifest_classes,
      manifest_weeks;

  static SynthPaths in(const std::filesystem::path& dir) {
    return {dir / "pings.csv",          dir / "block_groups.csv",     dir / "manifest_devices.csv",
            dir / "manifest_outcomes.csv", dir / "manifest_classes.csv", dir / "manifest_weeks.csv"};
  }
};

/// Generates a scenario and writes all files; returns the generator so
/// callers can inspect the truth.
inline Generator generate(const SynthConfig& cfg, const SynthPaths& paths) {
  Generator gen(cfg);
  const auto manifest = gen.manifest();
  auto emit = [](const std::filesystem::path& p, auto&& body) {
    AtomicFile f(p);
    body(f.stream());
    f.commit();
  };
  emit(paths.block_groups, [&](std::ostream& o) { write_block_groups(o, gen.block_groups()); });
  emit(paths.pings, [&](std::ostream& o) { write_pings(o, gen); });
  emit(paths.manifest_devices, [&](std::ostream& o) { write_manifest_devices(o, gen); });
  emit(paths.manifest_outcomes, [&](std::ostream& o) { write_manifest_outcomes(o, gen); });
  emit(paths.manifest_classes, [&](std::ostream& o) { write_manifest_classes(o, manifest); });
  emit(paths.manifest_weeks, [&](std::ostream& o) { write_manifest_weeks(o, manifest); });
  return gen;
}

}  // namespace mobjust::synth
