#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mobjust/format.hpp"
#include "mobjust/geo.hpp"
#include "mobjust/grid_index.hpp"
#include "mobjust/ingest.hpp"

namespace mobjust {

struct StayPointParams {
  std::int64_t min_duration_s = 900;
  double max_distance_m = 50.0;
};

struct StayPoint {
  std::string device_id;
  GeoPoint centroid;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  std::uint32_t n_pings = 0;
  double median_precision_m = 0.0;
  std::optional<std::string> block_group_id;

  std::int64_t duration() const { return t_end - t_start; }
};

/// Lower median: element at index (n - 1) / 2 of the sorted values.
inline double lower_median(std::vector<double> values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

/// Anchor sweep over a time-sorted ping list. From anchor i the window
/// grows while each next ping lies within max_distance of ping i; a window
/// spanning at least min_duration becomes a stay point and the sweep
/// resumes at the first excluded ping, otherwise at i + 1.
inline std::vector<StayPoint> detect_stay_points(std::span<const PingRecord> pings,
                                                 const StayPointParams& params = {}) {
  std::vector<StayPoint> out;
  const std::size_t n = pings.size();
  std::size_t i = 0;
  std::vector<GeoPoint> members;
  std::vector<double> precisions;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && haversine_distance(pings[i].point, pings[j].point) <= params.max_distance_m) ++j;
    if (pings[j - 1].t - pings[i].t >= params.min_duration_s) {
      members.clear();
      precisions.clear();
      for (std::size_t k = i; k < j; ++k) {
        members.push_back(pings[k].point);
        precisions.push_back(pings[k].precision_m);
      }
      StayPoint sp;
      sp.device_id = pings[i].device_id;
      sp.centroid = centroid(members);
      sp.t_start = pings[i].t;
      sp.t_end = pings[j - 1].t;
      sp.n_pings = static_cast<std::uint32_t>(j - i);
      sp.median_precision_m = lower_median(precisions);
      out.push_back(std::move(sp));
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

inline std::optional<std::string> staypoint_block_group(const StayPoint& sp, const GridIndex& index) {
  if (auto id = index.locate(sp.centroid)) return std::string(*id);
  return std::nullopt;
}

inline constexpr std::string_view kStayPointHeader =
    "device_id,lat,lon,t_start,t_end,n_pings,median_precision_m,block_group_id";

inline void write_stay_point(std::ostream& out, const StayPoint& sp) {
  out << sp.device_id << ',' << format_double(sp.centroid.lat) << ','
      << format_double(sp.centroid.lon) << ',' << sp.t_start << ',' << sp.t_end << ','
      << sp.n_pings << ',' << format_double(sp.median_precision_m) << ','
      << sp.block_group_id.value_or("") << '\n';
}

/// Reads a stay-point dump written by write_stay_point. Throws on any
/// malformed row: this file is produced by the pipeline itself.
inline std::vector<StayPoint> read_stay_points(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kStayPointHeader)
    throw Error(ErrorKind::MissingHeader, "stay-point file must start with '" +
                                              std::string(kStayPointHeader) + "'");
  std::vector<StayPoint> out;
  std::vector<std::string> f;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    if (!split_csv(line, f) || f.size() != 8)
      throw Error(ErrorKind::Io, "bad stay-point row " + std::to_string(row));
    StayPoint sp;
    sp.device_id = f[0];
    const auto lat = parse_double(f[1]);
    const auto lon = parse_double(f[2]);
    const auto t0 = parse_int(f[3]);
    const auto t1 = parse_int(f[4]);
    const auto n = parse_int(f[5]);
    const auto prec = parse_double(f[6]);
    if (!lat || !lon || !t0 || !t1 || !n || !prec)
      throw Error(ErrorKind::Io, "bad stay-point row " + std::to_string(row));
    sp.centroid = {*lat, *lon};
    sp.t_start = *t0;
    sp.t_end = *t1;
    sp.n_pings = static_cast<std::uint32_t>(*n);
    sp.median_precision_m = *prec;
    if (!trim(f[7]).empty()) sp.block_group_id = std::string(trim(f[7]));
    out.push_back(std::move(sp));
  }
  return out;
}

}  // namespace mobjust
