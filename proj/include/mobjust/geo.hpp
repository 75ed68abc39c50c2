#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace mobjust {

inline constexpr double kEarthRadiusM = 6371000.0;

/// Geographic coordinate in degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

inline double deg_to_rad(double deg) { return deg * (std::numbers::pi / 180.0); }

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
inline double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = deg_to_rad(a.lat);
  const double lat2 = deg_to_rad(b.lat);
  const double dlat = lat2 - lat1;
  const double dlon = deg_to_rad(b.lon - a.lon);
  const double s_lat = std::sin(dlat / 2.0);
  const double s_lon = std::sin(dlon / 2.0);
  double h = s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * s_lon * s_lon;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

/// Arithmetic mean of coordinates. Only meaningful at small spatial scales.
inline GeoPoint centroid(std::span<const GeoPoint> pts) {
  if (pts.empty()) return {};
  double lat = 0.0;
  double lon = 0.0;
  for (const auto& p : pts) {
    lat += p.lat;
    lon += p.lon;
  }
  const auto n = static_cast<double>(pts.size());
  return {lat / n, lon / n};
}

struct BoundingBox {
  double min_lat = 0.0;
  double min_lon = 0.0;
  double max_lat = 0.0;
  double max_lon = 0.0;

  bool contains(const GeoPoint& p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon &&
           p.lon <= max_lon;
  }

  void expand(const BoundingBox& o) {
    min_lat = std::min(min_lat, o.min_lat);
    min_lon = std::min(min_lon, o.min_lon);
    max_lat = std::max(max_lat, o.max_lat);
    max_lon = std::max(max_lon, o.max_lon);
  }
};

/// Closed ring: first vertex repeated as the last.
using Ring = std::vector<GeoPoint>;

struct Polygon {
  Ring exterior;
  std::vector<Ring> holes;
};

using MultiPolygon = std::vector<Polygon>;

inline BoundingBox bounding_box(const Ring& ring) {
  BoundingBox box{ring.front().lat, ring.front().lon, ring.front().lat,
                  ring.front().lon};
  for (const auto& p : ring) box.expand({p.lat, p.lon, p.lat, p.lon});
  return box;
}

inline BoundingBox bounding_box(const MultiPolygon& mp) {
  BoundingBox box = bounding_box(mp.front().exterior);
  for (const auto& poly : mp) box.expand(bounding_box(poly.exterior));
  return box;
}

namespace detail {

// Exact collinearity plus bbox test, in the (lon, lat) plane.
inline bool on_segment(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
  const double cross =
      (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  if (cross != 0.0) return false;
  return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
         p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat);
}

inline bool on_ring_boundary(const Ring& ring, const GeoPoint& p) {
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    if (on_segment(ring[i], ring[i + 1], p)) return true;
  }
  return false;
}

// Even-odd crossing test with a ray toward +lon.
inline bool ring_parity(const Ring& ring, const GeoPoint& p) {
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const GeoPoint& a = ring[i];
    const GeoPoint& b = ring[i + 1];
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
      if (p.lon < x) inside = !inside;
    }
  }
  return inside;
}

}  // namespace detail

/// Ray-casting containment. Points on any ring edge (holes included) count
/// as contained; points strictly inside a hole do not.
inline bool polygon_contains(const Polygon& poly, const GeoPoint& p) {
  if (detail::on_ring_boundary(poly.exterior, p)) return true;
  for (const auto& hole : poly.holes) {
    if (detail::on_ring_boundary(hole, p)) return true;
  }
  if (!detail::ring_parity(poly.exterior, p)) return false;
  for (const auto& hole : poly.holes) {
    if (detail::ring_parity(hole, p)) return false;
  }
  return true;
}

inline bool polygon_contains(const MultiPolygon& mp, const GeoPoint& p) {
  return std::any_of(mp.begin(), mp.end(),
                     [&](const Polygon& poly) { return polygon_contains(poly, p); });
}

/// Moves `origin` by metric offsets using a local equirectangular
/// approximation. Used for planting noise and layouts at sub-km scales.
inline GeoPoint offset_meters(const GeoPoint& origin, double north_m, double east_m) {
  const double dlat = north_m / kEarthRadiusM * (180.0 / std::numbers::pi);
  const double dlon = east_m / (kEarthRadiusM * std::cos(deg_to_rad(origin.lat))) *
                      (180.0 / std::numbers::pi);
  return {origin.lat + dlat, origin.lon + dlon};
}

}  // namespace mobjust
