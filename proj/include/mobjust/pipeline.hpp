#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "mobjust/calendar.hpp"
#include "mobjust/config.hpp"
#include "mobjust/csv.hpp"
#include "mobjust/format.hpp"
#include "mobjust/grid_index.hpp"
#include "mobjust/home.hpp"
#include "mobjust/ingest.hpp"
#include "mobjust/metrics.hpp"
#include "mobjust/parallel.hpp"
#include "mobjust/staypoint.hpp"
#include "mobjust/stats.hpp"
#include "mobjust/synth.hpp"

namespace mobjust {

// ---------------------------------------------------------------------------
// Per-device analysis
// ---------------------------------------------------------------------------

struct DeviceWeekMetrics {
  std::string device_id;
  int week = 0;
  std::string block_group_id;
  std::optional<NeighborhoodClass> neighborhood;
  double q_h = 0.0;
  std::int64_t q_sp = 0;
  double mu_hat = 0.0;
};

/// Stay points of one device, each tagged with its block group.
inline std::vector<StayPoint> device_stay_points(std::span<const PingRecord> pings,
                                                 const GridIndex& index,
                                                 const StayPointParams& params) {
  auto sps = detect_stay_points(pings, params);
  for (auto& sp : sps) sp.block_group_id = staypoint_block_group(sp, index);
  return sps;
}

/// One home outcome per study week, index week - 1.
inline std::vector<HomeOutcome> device_home_outcomes(std::string_view device_id,
                                                     std::span<const StayPoint> stay_points,
                                                     const StudyCalendar& cal, const GridIndex& index,
                                                     const HomeParams& params) {
  std::vector<HomeOutcome> out;
  out.reserve(static_cast<std::size_t>(cal.weeks()));
  for (int w = 1; w <= cal.weeks(); ++w)
    out.push_back(assign_week_home(device_id, stay_points, w, cal, index, params));
  return out;
}

inline std::span<const StayPoint> stay_points_starting_in(std::span<const StayPoint> sps,
                                                          const TimeWindow& win) {
  auto lo = std::lower_bound(sps.begin(), sps.end(), win.begin,
                             [](const StayPoint& sp, std::int64_t t) { return sp.t_start < t; });
  auto hi = std::lower_bound(lo, sps.end(), win.end,
                             [](const StayPoint& sp, std::int64_t t) { return sp.t_start < t; });
  return {lo, hi};
}

using BlockGroupLookup = std::map<std::string, const BlockGroup*, std::less<>>;

inline BlockGroupLookup make_lookup(const std::vector<BlockGroup>& bgs) {
  BlockGroupLookup out;
  for (const auto& bg : bgs) out.emplace(bg.id, &bg);
  return out;
}

/// Metrics for an assigned device-week; nullopt when the week has no pings.
inline std::optional<DeviceWeekMetrics> device_week_metrics(const HomeAssignment& home,
                                                            std::span<const StayPoint> device_sps,
                                                            std::span<const double> week_precisions,
                                                            const StudyCalendar& cal,
                                                            const BlockGroupLookup& lookup) {
  if (week_precisions.empty()) return std::nullopt;
  DeviceWeekMetrics m;
  m.device_id = home.device_id;
  m.week = home.week;
  m.block_group_id = home.block_group_id;
  if (auto it = lookup.find(home.block_group_id); it != lookup.end()) m.neighborhood = it->second->neighborhood;
  const auto q = device_week_quantity(stay_points_starting_in(device_sps, cal.week_window(home.week)), cal, home.week);
  m.q_h = q.q_h;
  m.q_sp = q.q_sp;
  m.mu_hat = device_week_precision(week_precisions);
  return m;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct BlockGroupWeekCount {
  int week = 0;
  std::string id;
  std::int64_t x = 0;
  std::int64_t population = 0;
  std::optional<double> p;  // empty for zero-population units
  bool over_one = false;
};

inline std::vector<BlockGroupWeekCount> block_group_counts(std::span<const HomeAssignment> homes,
                                                           const std::vector<BlockGroup>& bgs, int weeks) {
  std::vector<std::string> ids;
  for (const auto& bg : bgs) ids.push_back(bg.id);
  const auto lookup = make_lookup(bgs);
  std::vector<BlockGroupWeekCount> out;
  for (int w = 1; w <= weeks; ++w) {
    for (const auto& [id, x] : weekly_home_counts(homes, w, ids)) {
      BlockGroupWeekCount c;
      c.week = w;
      c.id = id;
      c.x = x;
      auto it = lookup.find(id);
      c.population = it == lookup.end() ? 0 : it->second->pop_total;
      if (c.population > 0) {
        c.p = representativeness(x, c.population);
        c.over_one = *c.p > 1.0;
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

inline constexpr std::array<std::string_view, 4> kMetricNames = {"p", "q_h", "q_sp", "mu_hat"};

inline constexpr std::array<std::pair<ClassLabel, ClassLabel>, 3> kTestPairs = {{
    {ClassLabel::White, ClassLabel::Black},
    {ClassLabel::White, ClassLabel::Hispanic},
    {ClassLabel::NonPoor, ClassLabel::Poor},
}};

struct ClassMetricRow {
  int week = 0;
  std::string metric;
  ClassLabel cls = ClassLabel::White;
  std::size_t n = 0;
  std::optional<stats::MedianCi> ci;  // empty for a missing cell
};

struct ClassTestRow {
  int week = 0;
  std::string metric;
  ClassLabel a = ClassLabel::White;
  ClassLabel b = ClassLabel::Black;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::optional<stats::MoodResult> result;
};

struct CorrelationRow {
  int week = 0;
  std::string level;
  std::size_t units = 0;
  std::optional<stats::TestResult> result;
};

struct ChoroplethRow {
  int week = 0;  // 0 carries census population
  std::string id;
  double value = 0.0;
  int bin = 0;
};

struct Report {
  std::vector<ClassMetricRow> class_metrics;
  std::vector<ClassTestRow> class_tests;
  std::vector<CorrelationRow> correlations;
  std::vector<ChoroplethRow> choropleth;

  const ClassMetricRow* find(int week, std::string_view metric, ClassLabel cls) const {
    for (const auto& r : class_metrics)
      if (r.week == week && r.metric == metric && r.cls == cls) return &r;
    return nullptr;
  }
};

struct ReportParams {
  double ci_level = 0.95;
  bool yates = false;
  int quantile_bins = 8;
};

namespace detail {

inline CorrelationRow correlate(int week, std::string level, std::span<const UnitCount> units) {
  CorrelationRow row{week, std::move(level), units.size(), std::nullopt};
  try {
    row.result = census_correlation(units);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InsufficientUnits && e.kind() != ErrorKind::DegenerateVariance) throw;
  }
  return row;
}

inline void add_choropleth(Report& report, int week, const std::vector<std::string>& ids,
                           const std::vector<double>& values, int k) {
  if (values.empty()) return;
  const auto bins = quantile_bins(values, k);
  for (std::size_t i = 0; i < ids.size(); ++i) report.choropleth.push_back({week, ids[i], values[i], bins.bin[i]});
}

}  // namespace detail

/// Per-week class medians with CIs, Mood's tests between the compared
/// classes, census correlations and choropleth bins. `p` is distributed over
/// block groups; q_h, q_sp and mu_hat over devices pooled by home class.
inline Report build_report(const std::vector<BlockGroup>& bgs, std::span<const BlockGroupWeekCount> counts,
                           std::span<const DeviceWeekMetrics> metrics, int weeks,
                           const ReportParams& params = {}) {
  Report report;
  std::vector<const BlockGroup*> sorted_bgs;
  for (const auto& bg : bgs) sorted_bgs.push_back(&bg);
  std::sort(sorted_bgs.begin(), sorted_bgs.end(),
            [](const BlockGroup* a, const BlockGroup* b) { return a->id < b->id; });
  {
    std::vector<std::string> ids;
    std::vector<double> pop;
    for (const auto* bg : sorted_bgs) {
      ids.push_back(bg->id);
      pop.push_back(static_cast<double>(bg->pop_total));
    }
    detail::add_choropleth(report, 0, ids, pop, params.quantile_bins);
  }

  for (int w = 1; w <= weeks; ++w) {
    std::map<std::string, std::int64_t, std::less<>> x;
    for (const auto& c : counts)
      if (c.week == w) x[c.id] = c.x;

    // Distributions per class and metric.
    std::map<std::pair<std::string_view, ClassLabel>, std::vector<double>> dist;
    for (auto cls : kAllClasses) dist[{"p", cls}] = class_representativeness(x, bgs, cls);
    for (const auto& m : metrics) {
      if (m.week != w || !m.neighborhood) continue;
      for (auto cls : kAllClasses) {
        if (!in_class(*m.neighborhood, cls)) continue;
        dist[{"q_h", cls}].push_back(m.q_h);
        dist[{"q_sp", cls}].push_back(static_cast<double>(m.q_sp));
        dist[{"mu_hat", cls}].push_back(m.mu_hat);
      }
    }
    for (auto metric : kMetricNames) {
      for (auto cls : kAllClasses) {
        const auto& v = dist[{metric, cls}];
        ClassMetricRow row{w, std::string(metric), cls, v.size(), std::nullopt};
        if (!v.empty()) row.ci = stats::median_ci(v, params.ci_level);
        report.class_metrics.push_back(std::move(row));
      }
      for (auto [a, b] : kTestPairs) {
        const auto& va = dist[{metric, a}];
        const auto& vb = dist[{metric, b}];
        ClassTestRow row{w, std::string(metric), a, b, va.size(), vb.size(), std::nullopt};
        if (!va.empty() && !vb.empty()) row.result = stats::moods_median_test(va, vb, params.yates);
        report.class_tests.push_back(std::move(row));
      }
    }

    std::vector<UnitCount> units;
    std::vector<std::string> ids;
    std::vector<double> xs;
    for (const auto* bg : sorted_bgs) {
      auto it = x.find(bg->id);
      const auto xi = it == x.end() ? 0 : it->second;
      ids.push_back(bg->id);
      xs.push_back(static_cast<double>(xi));
      if (bg->pop_total > 0) units.push_back({bg->id, xi, bg->pop_total});
    }
    report.correlations.push_back(detail::correlate(w, "block_group", units));
    const auto tracts = aggregate_tracts(units);
    report.correlations.push_back(detail::correlate(w, "tract", tracts));
    detail::add_choropleth(report, w, ids, xs, params.quantile_bins);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Home outcome tallies
// ---------------------------------------------------------------------------

struct HomeRejectTable {
  // [week - 1][reason]
  std::vector<std::array<std::uint64_t, static_cast<std::size_t>(HomeRejectReason::kCount)>> counts;

  explicit HomeRejectTable(int weeks = 0) : counts(static_cast<std::size_t>(weeks)) {}

  void add(int week, HomeRejectReason r) { ++counts[static_cast<std::size_t>(week - 1)][static_cast<std::size_t>(r)]; }
  std::uint64_t get(int week, HomeRejectReason r) const {
    return counts[static_cast<std::size_t>(week - 1)][static_cast<std::size_t>(r)];
  }
};

// ---------------------------------------------------------------------------
// In-memory run
// ---------------------------------------------------------------------------

struct DeviceOutcome {
  std::string device_id;
  std::vector<HomeOutcome> weeks;
};

struct PipelineResult {
  std::vector<DeviceOutcome> devices;  // source order
  std::vector<HomeAssignment> homes;   // by (week, device)
  HomeRejectTable rejects;
  std::vector<DeviceWeekMetrics> metrics;  // by (week, device)
  std::vector<BlockGroupWeekCount> counts;
  Report report;
};

inline bool week_device_less(int wa, std::string_view da, int wb, std::string_view db) {
  return wa != wb ? wa < wb : da < db;
}

/// Runs every stage without touching disk. `source(i)` returns device i's
/// pings sorted by time; all pings of a device must share its id.
template <typename Source>
PipelineResult run_in_memory(std::size_t n_devices, Source&& source, const std::vector<BlockGroup>& bgs,
                             const PipelineConfig& cfg) {
  const auto cal = cfg.calendar();
  const auto index = build_index(bgs, cfg.grid_cell_deg);
  const auto lookup = make_lookup(bgs);

  struct Slot {
    DeviceOutcome outcome;
    std::vector<DeviceWeekMetrics> metrics;
  };
  std::vector<Slot> slots(n_devices);
  parallel_for(n_devices, cfg.workers, [&](std::size_t i) {
    const std::vector<PingRecord> pings = source(i);
    auto& slot = slots[i];
    if (pings.empty()) return;
    slot.outcome.device_id = pings.front().device_id;
    const auto sps = device_stay_points(pings, index, cfg.staypoint);
    slot.outcome.weeks = device_home_outcomes(slot.outcome.device_id, sps, cal, index, cfg.home);
    for (const auto& o : slot.outcome.weeks) {
      const auto* home = std::get_if<HomeAssignment>(&o);
      if (!home) continue;
      std::vector<double> precisions;
      const auto win = cal.week_window(home->week);
      for (const auto& p : pings)
        if (win.contains(p.t)) precisions.push_back(p.precision_m);
      if (auto m = device_week_metrics(*home, sps, precisions, cal, lookup)) slot.metrics.push_back(std::move(*m));
    }
  });

  PipelineResult res;
  res.rejects = HomeRejectTable(cal.weeks());
  for (auto& slot : slots) {
    for (std::size_t w = 0; w < slot.outcome.weeks.size(); ++w) {
      const auto& o = slot.outcome.weeks[w];
      if (const auto* h = std::get_if<HomeAssignment>(&o)) res.homes.push_back(*h);
      else res.rejects.add(static_cast<int>(w) + 1, std::get<HomeRejectReason>(o));
    }
    for (auto& m : slot.metrics) res.metrics.push_back(std::move(m));
    res.devices.push_back(std::move(slot.outcome));
  }
  std::sort(res.homes.begin(), res.homes.end(), [](const HomeAssignment& a, const HomeAssignment& b) {
    return week_device_less(a.week, a.device_id, b.week, b.device_id);
  });
  std::sort(res.metrics.begin(), res.metrics.end(), [](const DeviceWeekMetrics& a, const DeviceWeekMetrics& b) {
    return week_device_less(a.week, a.device_id, b.week, b.device_id);
  });
  res.counts = block_group_counts(res.homes, bgs, cal.weeks());
  res.report = build_report(bgs, res.counts, res.metrics, cal.weeks(),
                            {cfg.ci_level, cfg.yates, cfg.quantile_bins});
  return res;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

namespace io {

inline constexpr std::string_view kHomesHeader = "device_id,week,block_group_id";
inline constexpr std::string_view kHomeRejectsHeader = "week,reason,count";
inline constexpr std::string_view kDeviceMetricsHeader =
    "device_id,week,block_group_id,race_class,poverty_class,q_h,q_sp,mu_hat";
inline constexpr std::string_view kCountsHeader = "week,block_group_id,tract_id,x,population,p,over_one";
inline constexpr std::string_view kClassMetricsHeader = "week,metric,class,n,median,ci_lo,ci_hi,small_sample";
inline constexpr std::string_view kClassTestsHeader =
    "week,metric,class_a,class_b,statistic,p_value,stars,n_a,n_b,degenerate";
inline constexpr std::string_view kCorrelationHeader = "week,level,n_units,statistic,p_value,stars";
inline constexpr std::string_view kChoroplethHeader = "week,block_group_id,value,bin";

inline void expect_header(std::istream& in, std::string_view header, const std::string& what) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != header)
    throw Error(ErrorKind::MissingHeader, what + " must start with '" + std::string(header) + "'");
}

inline void write_homes(std::ostream& out, std::span<const HomeAssignment> homes) {
  out << kHomesHeader << '\n';
  for (const auto& h : homes) out << h.device_id << ',' << h.week << ',' << h.block_group_id << '\n';
}

inline std::vector<HomeAssignment> read_homes(std::istream& in) {
  expect_header(in, kHomesHeader, "homes file");
  std::vector<HomeAssignment> out;
  std::string line;
  std::vector<std::string> f;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto week = split_csv(line, f) && f.size() == 3 ? parse_int(f[1]) : std::nullopt;
    if (!week) throw Error(ErrorKind::Io, "bad homes row: " + line);
    out.push_back({f[0], static_cast<int>(*week), f[2], {}});
  }
  return out;
}

inline void write_home_rejects(std::ostream& out, const HomeRejectTable& t) {
  out << kHomeRejectsHeader << '\n';
  for (std::size_t w = 0; w < t.counts.size(); ++w)
    for (std::size_t r = 0; r < t.counts[w].size(); ++r)
      out << w + 1 << ',' << to_string(static_cast<HomeRejectReason>(r)) << ',' << t.counts[w][r] << '\n';
}

inline void write_device_metrics(std::ostream& out, std::span<const DeviceWeekMetrics> metrics) {
  out << kDeviceMetricsHeader << '\n';
  for (const auto& m : metrics) {
    out << m.device_id << ',' << m.week << ',' << m.block_group_id << ','
        << (m.neighborhood ? to_string(m.neighborhood->race) : "unclassified") << ','
        << (m.neighborhood ? to_string(m.neighborhood->poverty) : "unclassified") << ','
        << format_double(m.q_h) << ',' << m.q_sp << ',' << format_double(m.mu_hat) << '\n';
  }
}

inline std::optional<RaceClass> parse_race(std::string_view s) {
  for (auto r : {RaceClass::MajorityWhite, RaceClass::MajorityBlack, RaceClass::MajorityHispanic, RaceClass::NoMajority})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

inline std::vector<DeviceWeekMetrics> read_device_metrics(std::istream& in) {
  expect_header(in, kDeviceMetricsHeader, "device metrics file");
  std::vector<DeviceWeekMetrics> out;
  std::string line;
  std::vector<std::string> f;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (!split_csv(line, f) || f.size() != 8) throw Error(ErrorKind::Io, "bad metrics row: " + line);
    DeviceWeekMetrics m;
    m.device_id = f[0];
    const auto week = parse_int(f[1]);
    const auto qh = parse_double(f[5]);
    const auto qsp = parse_int(f[6]);
    const auto mu = parse_double(f[7]);
    if (!week || !qh || !qsp || !mu) throw Error(ErrorKind::Io, "bad metrics row: " + line);
    m.week = static_cast<int>(*week);
    m.block_group_id = f[2];
    if (auto race = parse_race(f[3])) {
      m.neighborhood = NeighborhoodClass{*race, f[4] == "poor" ? PovertyClass::Poor : PovertyClass::NonPoor};
    }
    m.q_h = *qh;
    m.q_sp = *qsp;
    m.mu_hat = *mu;
    out.push_back(std::move(m));
  }
  return out;
}

inline void write_counts(std::ostream& out, std::span<const BlockGroupWeekCount> counts) {
  out << kCountsHeader << '\n';
  for (const auto& c : counts) {
    out << c.week << ',' << c.id << ',' << c.id.substr(0, 11) << ',' << c.x << ',' << c.population << ','
        << (c.p ? format_double(*c.p) : "") << ',' << (c.over_one ? 1 : 0) << '\n';
  }
}

inline std::vector<BlockGroupWeekCount> read_counts(std::istream& in) {
  expect_header(in, kCountsHeader, "block-group counts file");
  std::vector<BlockGroupWeekCount> out;
  std::string line;
  std::vector<std::string> f;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (!split_csv(line, f) || f.size() != 7) throw Error(ErrorKind::Io, "bad counts row: " + line);
    const auto week = parse_int(f[0]);
    const auto x = parse_int(f[3]);
    const auto pop = parse_int(f[4]);
    if (!week || !x || !pop) throw Error(ErrorKind::Io, "bad counts row: " + line);
    BlockGroupWeekCount c;
    c.week = static_cast<int>(*week);
    c.id = f[1];
    c.x = *x;
    c.population = *pop;
    c.p = parse_double(f[5]);
    c.over_one = f[6] == "1";
    out.push_back(std::move(c));
  }
  return out;
}

inline std::string num_or_na(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

inline void write_class_metrics(std::ostream& out, const Report& r) {
  out << kClassMetricsHeader << '\n';
  for (const auto& row : r.class_metrics) {
    out << row.week << ',' << row.metric << ',' << to_string(row.cls) << ',' << row.n << ',';
    if (row.ci) {
      out << format_double(row.ci->median) << ',' << format_double(row.ci->lo) << ','
          << format_double(row.ci->hi) << ',' << (row.ci->small_sample ? 1 : 0) << '\n';
    } else {
      out << "NA,NA,NA,NA\n";
    }
  }
}

inline void write_class_tests(std::ostream& out, const Report& r) {
  out << kClassTestsHeader << '\n';
  for (const auto& row : r.class_tests) {
    out << row.week << ',' << row.metric << ',' << to_string(row.a) << ',' << to_string(row.b) << ',';
    if (row.result) {
      out << format_double(row.result->statistic) << ',' << format_double(row.result->p_value) << ','
          << stats::to_string(row.result->significance()) << ',';
    } else {
      out << "NA,NA,NA,";
    }
    out << row.n_a << ',' << row.n_b << ',' << (row.result && row.result->degenerate ? 1 : 0) << '\n';
  }
}

inline void write_correlations(std::ostream& out, const Report& r) {
  out << kCorrelationHeader << '\n';
  for (const auto& row : r.correlations) {
    out << row.week << ',' << row.level << ',' << row.units << ',';
    if (row.result) {
      out << format_double(row.result->statistic) << ',' << format_double(row.result->p_value) << ','
          << stats::to_string(row.result->significance()) << '\n';
    } else {
      out << "NA,NA,NA\n";
    }
  }
}

inline void write_choropleth(std::ostream& out, const Report& r) {
  out << kChoroplethHeader << '\n';
  for (const auto& row : r.choropleth)
    out << row.week << ',' << row.id << ',' << format_double(row.value) << ',' << row.bin << '\n';
}

}  // namespace io

// ---------------------------------------------------------------------------
// File stages
// ---------------------------------------------------------------------------

struct OutputPaths {
  std::filesystem::path dir;

  std::filesystem::path operator/(std::string_view name) const { return dir / name; }

  static constexpr std::string_view kRejects = "rejects.csv";
  static constexpr std::string_view kStayPoints = "staypoints.csv";
  static constexpr std::string_view kHomes = "homes.csv";
  static constexpr std::string_view kHomeRejects = "home_rejects.csv";
  static constexpr std::string_view kDeviceMetrics = "device_metrics.csv";
  static constexpr std::string_view kCounts = "bg_counts.csv";
  static constexpr std::string_view kClassMetrics = "class_metrics.csv";
  static constexpr std::string_view kClassTests = "class_tests.csv";
  static constexpr std::string_view kCorrelation = "correlation.csv";
  static constexpr std::string_view kChoropleth = "choropleth.csv";
};

using Summary = std::vector<std::pair<std::string, std::string>>;

namespace detail {

template <typename Body>
void write_atomic(const std::filesystem::path& path, Body&& body) {
  AtomicFile f(path);
  body(f.stream());
  f.commit();
}

inline void write_summary(const std::filesystem::path& path, const Summary& s) {
  write_atomic(path, [&](std::ostream& o) {
    o << "key,value\n";
    for (const auto& [k, v] : s) o << k << ',' << v << '\n';
  });
}

inline std::vector<BlockGroup> load_block_groups_file(const PipelineConfig& cfg) {
  auto in = open_input(cfg.block_groups);
  return load_block_groups(in, cfg.thresholds);
}

inline ParsedPings load_pings_file(const PipelineConfig& cfg) {
  auto in = open_input(cfg.pings);
  return parse_pings(in, {cfg.calendar().study_window()});
}

}  // namespace detail

/// validate: parse both inputs, write the rejection report.
inline Summary stage_validate(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  const OutputPaths out{cfg.output_dir};
  const auto bgs = detail::load_block_groups_file(cfg);
  auto in = open_input(cfg.pings);
  std::uint64_t records = 0;
  std::map<std::string, std::uint64_t, std::less<>> devices;
  const auto report = parse_pings(in, {cfg.calendar().study_window()}, [&](PingRecord&& p) {
    ++records;
    ++devices[p.device_id];
  });
  detail::write_atomic(out / OutputPaths::kRejects, [&](std::ostream& o) { report.write_csv(o); });
  const auto unclassifiable = std::count_if(bgs.begin(), bgs.end(), [](const BlockGroup& b) { return !b.neighborhood; });
  Summary s = {{"lines", std::to_string(report.lines)},
               {"records", std::to_string(records)},
               {"rejected", std::to_string(report.total())},
               {"devices", std::to_string(devices.size())},
               {"block_groups", std::to_string(bgs.size())},
               {"unclassifiable_block_groups", std::to_string(unclassifiable)}};
  detail::write_summary(out / "validate_summary.csv", s);
  return s;
}

/// staypoints: detect and locate stay points per device.
inline Summary stage_staypoints(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  const OutputPaths out{cfg.output_dir};
  const auto bgs = detail::load_block_groups_file(cfg);
  const auto index = build_index(bgs, cfg.grid_cell_deg);
  auto parsed = detail::load_pings_file(cfg);
  const auto devices = partition_by_device(std::move(parsed.records));
  std::vector<const std::vector<PingRecord>*> lists;
  for (const auto& [id, list] : devices) lists.push_back(&list);
  std::vector<std::vector<StayPoint>> results(lists.size());
  parallel_for(lists.size(), cfg.workers,
               [&](std::size_t i) { results[i] = device_stay_points(*lists[i], index, cfg.staypoint); });
  std::size_t total = 0, located = 0;
  detail::write_atomic(out / OutputPaths::kStayPoints, [&](std::ostream& o) {
    o << kStayPointHeader << '\n';
    for (const auto& sps : results)
      for (const auto& sp : sps) {
        write_stay_point(o, sp);
        ++total;
        located += sp.block_group_id ? 1 : 0;
      }
  });
  Summary s = {{"devices", std::to_string(lists.size())},
               {"stay_points", std::to_string(total)},
               {"located_stay_points", std::to_string(located)},
               {"rejected_pings", std::to_string(parsed.report.total())}};
  detail::write_summary(out / "staypoints_summary.csv", s);
  return s;
}

namespace detail {

// Stay points grouped per device (file order is device, then time).
inline std::vector<std::vector<StayPoint>> group_stay_points(std::vector<StayPoint> sps) {
  std::stable_sort(sps.begin(), sps.end(), [](const StayPoint& a, const StayPoint& b) {
    return a.device_id != b.device_id ? a.device_id < b.device_id : a.t_start < b.t_start;
  });
  std::vector<std::vector<StayPoint>> out;
  for (auto& sp : sps) {
    if (out.empty() || out.back().front().device_id != sp.device_id) out.emplace_back();
    out.back().push_back(std::move(sp));
  }
  return out;
}

inline std::vector<std::vector<StayPoint>> load_stay_points(const OutputPaths& out) {
  auto in = open_input(out / OutputPaths::kStayPoints);
  return group_stay_points(read_stay_points(in));
}

}  // namespace detail

/// homes: weekly home block group per device.
inline Summary stage_homes(const PipelineConfig& cfg) {
  const OutputPaths out{cfg.output_dir};
  const auto cal = cfg.calendar();
  const auto bgs = detail::load_block_groups_file(cfg);
  const auto index = build_index(bgs, cfg.grid_cell_deg);
  const auto per_device = detail::load_stay_points(out);
  std::vector<std::vector<HomeOutcome>> outcomes(per_device.size());
  parallel_for(per_device.size(), cfg.workers, [&](std::size_t i) {
    outcomes[i] = device_home_outcomes(per_device[i].front().device_id, per_device[i], cal, index, cfg.home);
  });
  std::vector<HomeAssignment> homes;
  HomeRejectTable rejects(cal.weeks());
  for (const auto& weeks : outcomes) {
    for (std::size_t w = 0; w < weeks.size(); ++w) {
      if (const auto* h = std::get_if<HomeAssignment>(&weeks[w])) homes.push_back(*h);
      else rejects.add(static_cast<int>(w) + 1, std::get<HomeRejectReason>(weeks[w]));
    }
  }
  std::sort(homes.begin(), homes.end(), [](const HomeAssignment& a, const HomeAssignment& b) {
    return week_device_less(a.week, a.device_id, b.week, b.device_id);
  });
  detail::write_atomic(out / OutputPaths::kHomes, [&](std::ostream& o) { io::write_homes(o, homes); });
  detail::write_atomic(out / OutputPaths::kHomeRejects, [&](std::ostream& o) { io::write_home_rejects(o, rejects); });
  Summary s = {{"devices_with_stay_points", std::to_string(per_device.size())},
               {"assignments", std::to_string(homes.size())}};
  detail::write_summary(out / "homes_summary.csv", s);
  return s;
}

/// metrics: per device-week quantity and precision, per block-group counts.
inline Summary stage_metrics(const PipelineConfig& cfg) {
  const OutputPaths out{cfg.output_dir};
  const auto cal = cfg.calendar();
  const auto bgs = detail::load_block_groups_file(cfg);
  const auto lookup = make_lookup(bgs);
  std::vector<HomeAssignment> homes;
  {
    auto in = open_input(out / OutputPaths::kHomes);
    homes = io::read_homes(in);
  }
  const auto per_device = detail::load_stay_points(out);
  std::unordered_map<std::string, std::size_t> device_slot;
  for (std::size_t i = 0; i < per_device.size(); ++i) device_slot.emplace(per_device[i].front().device_id, i);

  // Precision samples only for assigned device-weeks.
  const auto n_weeks = static_cast<std::size_t>(cal.weeks());
  std::unordered_map<std::string, std::vector<std::vector<double>>> precisions;
  std::unordered_map<std::string, std::vector<bool>> assigned;
  for (const auto& h : homes) {
    precisions[h.device_id].resize(n_weeks);
    auto& v = assigned[h.device_id];
    v.resize(n_weeks);
    v[static_cast<std::size_t>(h.week - 1)] = true;
  }
  {
    auto in = open_input(cfg.pings);
    parse_pings(in, {cal.study_window()}, [&](PingRecord&& p) {
      auto it = assigned.find(p.device_id);
      if (it == assigned.end()) return;
      const auto w = static_cast<std::size_t>(*cal.week_of(p.t) - 1);
      if (it->second[w]) precisions[p.device_id][w].push_back(p.precision_m);
    });
  }

  std::vector<std::optional<DeviceWeekMetrics>> rows(homes.size());
  parallel_for(homes.size(), cfg.workers, [&](std::size_t i) {
    const auto& h = homes[i];
    const auto slot = device_slot.find(h.device_id);
    const std::span<const StayPoint> sps =
        slot == device_slot.end() ? std::span<const StayPoint>{} : std::span<const StayPoint>(per_device[slot->second]);
    rows[i] = device_week_metrics(h, sps, precisions.at(h.device_id)[static_cast<std::size_t>(h.week - 1)], cal, lookup);
  });
  std::vector<DeviceWeekMetrics> metrics;
  for (auto& r : rows)
    if (r) metrics.push_back(std::move(*r));
  const auto counts = block_group_counts(homes, bgs, cal.weeks());
  detail::write_atomic(out / OutputPaths::kDeviceMetrics, [&](std::ostream& o) { io::write_device_metrics(o, metrics); });
  detail::write_atomic(out / OutputPaths::kCounts, [&](std::ostream& o) { io::write_counts(o, counts); });
  const auto over_one = std::count_if(counts.begin(), counts.end(), [](const auto& c) { return c.over_one; });
  Summary s = {{"device_weeks", std::to_string(metrics.size())},
               {"device_weeks_without_pings", std::to_string(homes.size() - metrics.size())},
               {"block_group_weeks", std::to_string(counts.size())},
               {"block_group_weeks_p_over_one", std::to_string(over_one)}};
  detail::write_summary(out / "metrics_summary.csv", s);
  return s;
}

/// report: class tables, tests, correlations and choropleth data.
inline Summary stage_report(const PipelineConfig& cfg) {
  const OutputPaths out{cfg.output_dir};
  const auto cal = cfg.calendar();
  const auto bgs = detail::load_block_groups_file(cfg);
  std::vector<DeviceWeekMetrics> metrics;
  std::vector<BlockGroupWeekCount> counts;
  {
    auto in = open_input(out / OutputPaths::kDeviceMetrics);
    metrics = io::read_device_metrics(in);
  }
  {
    auto in = open_input(out / OutputPaths::kCounts);
    counts = io::read_counts(in);
  }
  const auto report = build_report(bgs, counts, metrics, cal.weeks(), {cfg.ci_level, cfg.yates, cfg.quantile_bins});
  detail::write_atomic(out / OutputPaths::kClassMetrics, [&](std::ostream& o) { io::write_class_metrics(o, report); });
  detail::write_atomic(out / OutputPaths::kClassTests, [&](std::ostream& o) { io::write_class_tests(o, report); });
  detail::write_atomic(out / OutputPaths::kCorrelation, [&](std::ostream& o) { io::write_correlations(o, report); });
  detail::write_atomic(out / OutputPaths::kChoropleth, [&](std::ostream& o) { io::write_choropleth(o, report); });
  Summary s = {{"weeks", std::to_string(cal.weeks())},
               {"class_metric_rows", std::to_string(report.class_metrics.size())},
               {"class_test_rows", std::to_string(report.class_tests.size())},
               {"correlation_rows", std::to_string(report.correlations.size())}};
  detail::write_summary(out / "report_summary.csv", s);
  return s;
}

/// synth: generate pings and block groups at the configured input paths and
/// the truth manifest in the output directory.
inline Summary stage_synth(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  for (const auto& p : {cfg.pings, cfg.block_groups})
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  auto paths = synth::SynthPaths::in(cfg.output_dir);
  paths.pings = cfg.pings;
  paths.block_groups = cfg.block_groups;
  const auto gen = synth::generate(cfg.synth, paths);
  Summary s = {{"seed", std::to_string(cfg.synth.seed)},
               {"block_groups", std::to_string(gen.block_groups().size())},
               {"devices", std::to_string(gen.devices().size())}};
  detail::write_summary(cfg.output_dir / "synth_summary.csv", s);
  return s;
}

/// all: optional synth, then every stage in order.
inline void stage_all(const PipelineConfig& cfg) {
  if (cfg.synth_enabled) stage_synth(cfg);
  stage_validate(cfg);
  stage_staypoints(cfg);
  stage_homes(cfg);
  stage_metrics(cfg);
  stage_report(cfg);
}

}  // namespace mobjust
