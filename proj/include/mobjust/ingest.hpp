#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mobjust/calendar.hpp"
#include "mobjust/csv.hpp"
#include "mobjust/error.hpp"
#include "mobjust/format.hpp"
#include "mobjust/geo.hpp"
#include "mobjust/grid_index.hpp"
#include "mobjust/wkt.hpp"

namespace mobjust {

// ---------------------------------------------------------------------------
// Pings
// ---------------------------------------------------------------------------

inline constexpr std::string_view kPingHeader = "device_id,lat,lon,t,precision_m";

struct PingRecord {
  std::string device_id;
  GeoPoint point;
  std::int64_t t = 0;
  double precision_m = 0.0;

  friend bool operator==(const PingRecord&, const PingRecord&) = default;
};

enum class RejectReason : std::size_t {
  MalformedLine,
  EmptyDeviceId,
  UnparseableField,
  OutOfRangeLatitude,
  OutOfRangeLongitude,
  InvalidPrecision,
  OutOfStudyWindow,
  kCount,
};

inline std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::MalformedLine: return "MalformedLine";
    case RejectReason::EmptyDeviceId: return "EmptyDeviceId";
    case RejectReason::UnparseableField: return "UnparseableField";
    case RejectReason::OutOfRangeLatitude: return "OutOfRangeLatitude";
    case RejectReason::OutOfRangeLongitude: return "OutOfRangeLongitude";
    case RejectReason::InvalidPrecision: return "InvalidPrecision";
    case RejectReason::OutOfStudyWindow: return "OutOfStudyWindow";
    case RejectReason::kCount: break;
  }
  return "Unknown";
}

struct RejectReport {
  std::array<std::uint64_t, static_cast<std::size_t>(RejectReason::kCount)> counts{};
  std::uint64_t lines = 0;  // data lines seen, header excluded

  void add(RejectReason r) { ++counts[static_cast<std::size_t>(r)]; }
  std::uint64_t count(RejectReason r) const { return counts[static_cast<std::size_t>(r)]; }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }

  /// CSV `reason,count`, one row per reason that occurred.
  void write_csv(std::ostream& out) const {
    out << "reason,count\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) continue;
      out << to_string(static_cast<RejectReason>(i)) << ',' << counts[i] << '\n';
    }
  }
};

struct PingParseOptions {
  std::optional<TimeWindow> study_window;
};

/// Validates one data line. Returns the rejection reason or fills `out`.
inline std::optional<RejectReason> parse_ping_line(std::string_view line,
                                                   const PingParseOptions& opts,
                                                   std::vector<std::string>& scratch,
                                                   PingRecord& out) {
  if (!split_csv(line, scratch) || scratch.size() != 5) return RejectReason::MalformedLine;
  const auto id = trim(scratch[0]);
  if (id.empty()) return RejectReason::EmptyDeviceId;
  const auto lat = parse_double(scratch[1]);
  const auto lon = parse_double(scratch[2]);
  const auto t = parse_int(scratch[3]);
  const auto prec = parse_double(scratch[4]);
  if (!lat || !lon || !t || !prec) return RejectReason::UnparseableField;
  if (!std::isfinite(*lat) || *lat < -90.0 || *lat > 90.0) return RejectReason::OutOfRangeLatitude;
  if (!std::isfinite(*lon) || *lon < -180.0 || *lon > 180.0) return RejectReason::OutOfRangeLongitude;
  if (!std::isfinite(*prec) || *prec <= 0.0) return RejectReason::InvalidPrecision;
  if (opts.study_window && !opts.study_window->contains(*t)) return RejectReason::OutOfStudyWindow;
  out.device_id.assign(id);
  out.point = {*lat, *lon};
  out.t = *t;
  out.precision_m = *prec;
  return std::nullopt;
}

/// Streams a ping file, calling `sink(PingRecord&&)` for each valid line in
/// input order. An empty stream yields nothing; otherwise the first line
/// must be the header.
template <typename Sink>
RejectReport parse_pings(std::istream& in, const PingParseOptions& opts, Sink&& sink) {
  RejectReport report;
  std::string line;
  if (!std::getline(in, line)) return report;
  if (trim(line) != kPingHeader)
    throw Error(ErrorKind::MissingHeader, "ping file must start with '" + std::string(kPingHeader) + "'");
  std::vector<std::string> scratch;
  PingRecord rec;
  while (std::getline(in, line)) {
    ++report.lines;
    if (auto reason = parse_ping_line(line, opts, scratch, rec)) {
      report.add(*reason);
    } else {
      sink(std::move(rec));
      rec = PingRecord{};
    }
  }
  if (in.bad()) throw Error(ErrorKind::FileUnreadable, "read error in ping file");
  return report;
}

struct ParsedPings {
  std::vector<PingRecord> records;
  RejectReport report;
};

inline ParsedPings parse_pings(std::istream& in, const PingParseOptions& opts = {}) {
  ParsedPings out;
  out.report = parse_pings(in, opts, [&](PingRecord&& r) { out.records.push_back(std::move(r)); });
  return out;
}

inline void write_ping_header(std::ostream& out) { out << kPingHeader << '\n'; }

inline void write_ping(std::ostream& out, const PingRecord& p) {
  out << p.device_id << ',' << format_double(p.point.lat) << ',' << format_double(p.point.lon)
      << ',' << p.t << ',' << format_double(p.precision_m) << '\n';
}

using DevicePings = std::map<std::string, std::vector<PingRecord>, std::less<>>;

/// Groups pings by device; each list is sorted by t, stable for equal t.
inline DevicePings partition_by_device(std::vector<PingRecord> pings) {
  DevicePings out;
  for (auto& p : pings) {
    auto it = out.find(p.device_id);
    if (it == out.end()) it = out.emplace(p.device_id, std::vector<PingRecord>{}).first;
    it->second.push_back(std::move(p));
  }
  for (auto& [id, list] : out) {
    std::stable_sort(list.begin(), list.end(),
                     [](const PingRecord& a, const PingRecord& b) { return a.t < b.t; });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Block groups
// ---------------------------------------------------------------------------

inline constexpr std::string_view kBlockGroupHeader =
    "id,wkt,pop_total,pop_white,pop_black,pop_hispanic,poverty_share";

enum class RaceClass { MajorityWhite, MajorityBlack, MajorityHispanic, NoMajority };
enum class PovertyClass { Poor, NonPoor };

inline std::string_view to_string(RaceClass c) {
  switch (c) {
    case RaceClass::MajorityWhite: return "white";
    case RaceClass::MajorityBlack: return "black";
    case RaceClass::MajorityHispanic: return "hispanic";
    case RaceClass::NoMajority: return "no_majority";
  }
  return "?";
}

inline std::string_view to_string(PovertyClass c) {
  return c == PovertyClass::Poor ? "poor" : "nonpoor";
}

struct NeighborhoodClass {
  RaceClass race = RaceClass::NoMajority;
  PovertyClass poverty = PovertyClass::NonPoor;

  friend bool operator==(const NeighborhoodClass&, const NeighborhoodClass&) = default;
};

struct ClassThresholds {
  double majority = 0.5;
  double poverty = 0.3;
};

/// Strict "more than" thresholds. Null for zero-population units.
inline std::optional<NeighborhoodClass> classify(std::int64_t total, std::int64_t white,
                                                 std::int64_t black, std::int64_t hispanic,
                                                 double poverty_share,
                                                 const ClassThresholds& th = {}) {
  if (total <= 0) return std::nullopt;
  const double n = static_cast<double>(total);
  NeighborhoodClass c;
  if (static_cast<double>(white) / n > th.majority) c.race = RaceClass::MajorityWhite;
  else if (static_cast<double>(black) / n > th.majority) c.race = RaceClass::MajorityBlack;
  else if (static_cast<double>(hispanic) / n > th.majority) c.race = RaceClass::MajorityHispanic;
  c.poverty = poverty_share > th.poverty ? PovertyClass::Poor : PovertyClass::NonPoor;
  return c;
}

struct BlockGroup {
  std::string id;  // 12-character GEOID
  MultiPolygon geometry;
  std::int64_t pop_total = 0;
  std::int64_t pop_white = 0;
  std::int64_t pop_black = 0;
  std::int64_t pop_hispanic = 0;
  double poverty_share = 0.0;
  std::optional<NeighborhoodClass> neighborhood;  // empty when unclassifiable

  std::string_view tract_id() const { return std::string_view(id).substr(0, 11); }
};

/// Reads the block-group CSV. Every row becomes a BlockGroup; rows with a
/// zero population stay in the list with no neighborhood class.
inline std::vector<BlockGroup> load_block_groups(std::istream& in, const ClassThresholds& th = {}) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kBlockGroupHeader)
    throw Error(ErrorKind::MissingHeader,
                "block-group file must start with '" + std::string(kBlockGroupHeader) + "'");
  std::vector<BlockGroup> out;
  std::set<std::string, std::less<>> seen;
  std::vector<std::string> f;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto where = " (row " + std::to_string(row) + ")";
    if (!split_csv(line, f) || f.size() != 7)
      throw Error(ErrorKind::InvalidBlockGroup, "expected 7 fields" + where);
    BlockGroup bg;
    bg.id = std::string(trim(f[0]));
    if (bg.id.size() != 12) throw Error(ErrorKind::InvalidBlockGroup, "GEOID must have 12 characters" + where);
    try {
      bg.geometry = parse_wkt(f[1]);
    } catch (const Error& e) {
      throw Error(ErrorKind::MalformedWkt, std::string(e.what()) + where);
    }
    const auto total = parse_int(f[2]);
    const auto white = parse_int(f[3]);
    const auto black = parse_int(f[4]);
    const auto hisp = parse_int(f[5]);
    const auto pov = parse_double(f[6]);
    if (!total || !white || !black || !hisp || !pov)
      throw Error(ErrorKind::InvalidBlockGroup, "unparseable count" + where);
    if (*total < 0 || *white < 0 || *black < 0 || *hisp < 0 || *white + *black + *hisp > *total)
      throw Error(ErrorKind::InvalidBlockGroup, "race counts exceed population" + where);
    if (!(*pov >= 0.0 && *pov <= 1.0))
      throw Error(ErrorKind::InvalidBlockGroup, "poverty_share outside [0,1]" + where);
    if (!seen.insert(bg.id).second) throw Error(ErrorKind::DuplicateId, "duplicate id " + bg.id);
    bg.pop_total = *total;
    bg.pop_white = *white;
    bg.pop_black = *black;
    bg.pop_hispanic = *hisp;
    bg.poverty_share = *pov;
    bg.neighborhood = classify(*total, *white, *black, *hisp, *pov, th);
    out.push_back(std::move(bg));
  }
  return out;
}

inline void write_block_groups(std::ostream& out, const std::vector<BlockGroup>& bgs) {
  out << kBlockGroupHeader << '\n';
  for (const auto& bg : bgs) {
    out << bg.id << ',' << csv_quote(to_wkt(bg.geometry)) << ',' << bg.pop_total << ','
        << bg.pop_white << ',' << bg.pop_black << ',' << bg.pop_hispanic << ','
        << format_double(bg.poverty_share) << '\n';
  }
}

inline GridIndex build_index(const std::vector<BlockGroup>& bgs, double cell_deg = 0.01) {
  std::vector<IndexedShape> shapes;
  shapes.reserve(bgs.size());
  for (const auto& bg : bgs) shapes.push_back({bg.id, bg.geometry});
  return GridIndex(std::move(shapes), cell_deg);
}

}  // namespace mobjust
