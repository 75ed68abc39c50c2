#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mobjust/calendar.hpp"
#include "mobjust/error.hpp"
#include "mobjust/format.hpp"
#include "mobjust/home.hpp"
#include "mobjust/ingest.hpp"
#include "mobjust/staypoint.hpp"
#include "mobjust/synth.hpp"

namespace mobjust {

inline constexpr std::string_view kEnvPrefix = "MOBJUST_";

struct PipelineConfig {
  std::filesystem::path pings = "pings.csv";
  std::filesystem::path block_groups = "block_groups.csv";
  std::filesystem::path output_dir = "out";

  std::string start_date = "2017-07-31";
  int weeks = 9;
  double utc_offset_hours = -5.0;

  StayPointParams staypoint;
  HomeParams home;
  ClassThresholds thresholds;
  double ci_level = 0.95;
  int quantile_bins = 8;
  bool yates = false;
  double grid_cell_deg = 0.01;
  unsigned workers = 1;

  bool synth_enabled = false;  // `all` generates its inputs first
  synth::SynthConfig synth;

  StudyCalendar calendar() const {
    return StudyCalendar(start_date, weeks, static_cast<std::int64_t>(utc_offset_hours * kSecondsPerHour));
  }
};

/// Flat `key = value` text; '#' starts a comment line.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    out[std::string(trim(t.substr(0, eq)))] = std::string(trim(t.substr(eq + 1)));
  }
  return out;
}

inline std::string env_name(std::string_view key) {
  std::string name(kEnvPrefix);
  for (char c : key) name.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return name;
}

namespace detail {

class ConfigBinder {
 public:
  explicit ConfigBinder(const std::map<std::string, std::string>& kv) : kv_(kv) {}

  template <typename T>
  void bind(const std::string& key, T& target) {
    known_.push_back(key);
    std::string value;
    if (const char* env = std::getenv(env_name(key).c_str())) value = env;
    else if (auto it = kv_.find(key); it != kv_.end()) value = it->second;
    else return;
    assign(key, value, target);
  }

  void reject_unknown() const {
    for (const auto& [k, v] : kv_) {
      if (std::find(known_.begin(), known_.end(), k) == known_.end())
        throw Error(ErrorKind::InvalidConfig, "unknown config key '" + k + "'");
    }
  }

 private:
  [[noreturn]] static void bad(const std::string& key, const std::string& value) {
    throw Error(ErrorKind::InvalidConfig, "bad value '" + value + "' for " + key);
  }

  static void assign(const std::string& key, const std::string& v, std::string& t) {
    if (v.empty()) bad(key, v);
    t = v;
  }
  static void assign(const std::string&, const std::string& v, std::filesystem::path& t) { t = v; }
  static void assign(const std::string& key, const std::string& v, double& t) {
    auto d = parse_double(v);
    if (!d) bad(key, v);
    t = *d;
  }
  static void assign(const std::string& key, const std::string& v, bool& t) {
    if (v == "true" || v == "1") t = true;
    else if (v == "false" || v == "0") t = false;
    else bad(key, v);
  }
  template <typename I>
    requires std::is_integral_v<I>
  static void assign(const std::string& key, const std::string& v, I& t) {
    auto d = parse_int(v);
    if (!d || (std::is_unsigned_v<I> && *d < 0)) bad(key, v);
    t = static_cast<I>(*d);
  }
  static void assign(const std::string& key, const std::string& v, std::vector<int>& t) {
    t.clear();
    std::string_view rest(v);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      auto item = parse_int(rest.substr(0, comma));
      if (!item) bad(key, v);
      t.push_back(static_cast<int>(*item));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }

  const std::map<std::string, std::string>& kv_;
  std::vector<std::string> known_;
};

}  // namespace detail

/// Builds a configuration from key/value pairs. Environment variables named
/// MOBJUST_<KEY> (dots become underscores, upper case) override file values.
inline PipelineConfig make_config(const std::map<std::string, std::string>& kv) {
  PipelineConfig c;
  detail::ConfigBinder b(kv);
  b.bind("pings", c.pings);
  b.bind("block_groups", c.block_groups);
  b.bind("output_dir", c.output_dir);
  b.bind("start_date", c.start_date);
  b.bind("weeks", c.weeks);
  b.bind("utc_offset_hours", c.utc_offset_hours);
  b.bind("staypoint.min_duration_s", c.staypoint.min_duration_s);
  b.bind("staypoint.max_distance_m", c.staypoint.max_distance_m);
  b.bind("home.max_diameter_m", c.home.max_diameter_m);
  b.bind("home.night_start_hour", c.home.night_start_hour);
  b.bind("home.night_end_hour", c.home.night_end_hour);
  b.bind("class.majority_threshold", c.thresholds.majority);
  b.bind("class.poverty_threshold", c.thresholds.poverty);
  b.bind("report.ci_level", c.ci_level);
  b.bind("report.quantile_bins", c.quantile_bins);
  b.bind("report.yates", c.yates);
  b.bind("index.cell_deg", c.grid_cell_deg);
  b.bind("workers", c.workers);

  auto& s = c.synth;
  b.bind("synth.enabled", c.synth_enabled);
  b.bind("synth.seed", s.seed);
  b.bind("synth.origin_lat", s.origin.lat);
  b.bind("synth.origin_lon", s.origin.lon);
  b.bind("synth.block_group_deg", s.block_group_deg);
  b.bind("synth.block_groups_per_tract", s.block_groups_per_tract);
  b.bind("synth.block_groups_white", s.block_groups_per_class[0]);
  b.bind("synth.block_groups_black", s.block_groups_per_class[1]);
  b.bind("synth.block_groups_hispanic", s.block_groups_per_class[2]);
  b.bind("synth.block_groups_no_majority", s.block_groups_per_class[3]);
  b.bind("synth.pop_min", s.pop_min);
  b.bind("synth.pop_max", s.pop_max);
  b.bind("synth.tract_population_share", s.tract_population_share);
  b.bind("synth.poor_probability_white", s.poor_probability[0]);
  b.bind("synth.poor_probability_black", s.poor_probability[1]);
  b.bind("synth.poor_probability_hispanic", s.poor_probability[2]);
  b.bind("synth.poor_probability_no_majority", s.poor_probability[3]);
  b.bind("synth.ownership_white", s.ownership_rate[0]);
  b.bind("synth.ownership_black", s.ownership_rate[1]);
  b.bind("synth.ownership_hispanic", s.ownership_rate[2]);
  b.bind("synth.ownership_no_majority", s.ownership_rate[3]);
  b.bind("synth.anchors_min", s.anchors_min);
  b.bind("synth.anchors_max", s.anchors_max);
  b.bind("synth.visits_min", s.visits_min);
  b.bind("synth.visits_max", s.visits_max);
  b.bind("synth.ping_interval_s", s.ping_interval_s);
  b.bind("synth.noise_sigma_m", s.noise_sigma_m);
  b.bind("synth.precision_median_m", s.precision_median_m);
  b.bind("synth.precision_log_sigma", s.precision_log_sigma);
  b.bind("synth.home_margin_m", s.home_margin_m);
  b.bind("synth.violation_fraction", s.violation_fraction);
  b.bind("synth.disruption_weeks", s.disruption.weeks);
  b.bind("synth.contraction", s.disruption.contraction);
  b.bind("synth.inflation", s.disruption.inflation);
  b.bind("synth.dropout", s.disruption.dropout);
  b.reject_unknown();

  s.start_date = c.start_date;
  s.weeks = c.weeks;
  s.utc_offset_s = static_cast<std::int64_t>(c.utc_offset_hours * kSecondsPerHour);

  auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidConfig, m); };
  if (c.weeks < 1) bad("weeks must be >= 1");
  if (c.staypoint.min_duration_s <= 0 || !(c.staypoint.max_distance_m > 0.0)) bad("stay-point parameters must be positive");
  if (!(c.home.max_diameter_m > 0.0)) bad("cluster diameter must be positive");
  if (!(c.thresholds.majority > 0.0) || !(c.thresholds.poverty > 0.0)) bad("class thresholds must be positive");
  if (!(c.ci_level > 0.0 && c.ci_level < 1.0)) bad("ci_level must be in (0,1)");
  if (c.quantile_bins < 1) bad("quantile_bins must be >= 1");
  if (!(c.grid_cell_deg > 0.0)) bad("index.cell_deg must be positive");
  if (c.workers < 1) bad("workers must be >= 1");
  (void)c.calendar();  // validates date and Monday start
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  auto kv = parse_key_values(in);
  auto cfg = make_config(kv);
  // Relative input/output paths resolve against the config file's directory.
  const auto base = path.parent_path();
  for (auto* p : {&cfg.pings, &cfg.block_groups, &cfg.output_dir})
    if (p->is_relative()) *p = base / *p;
  return cfg;
}

}  // namespace mobjust
