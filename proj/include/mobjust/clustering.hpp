#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "mobjust/error.hpp"
#include "mobjust/geo.hpp"

namespace mobjust {

struct Cluster {
  std::vector<std::size_t> members;  // ascending indices into the input
  GeoPoint centroid;
  double diameter_m = 0.0;
};

/// Agglomerative clustering with complete linkage. The pair of clusters with
/// the smallest maximum member distance merges first; equal distances pick
/// the smallest (i, j) position pair, where positions order clusters by their
/// smallest member index. Stops once that distance exceeds max_diameter_m, so
/// no output cluster is wider than max_diameter_m.
inline std::vector<Cluster> complete_linkage_cluster(std::span<const GeoPoint> points,
                                                     double max_diameter_m = 50.0) {
  const std::size_t n = points.size();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "nothing to cluster");

  // Slot s holds the cluster whose smallest member is s.
  std::vector<double> link(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      link[a * n + b] = link[b * n + a] = haversine_distance(points[a], points[b]);
  std::vector<std::vector<std::size_t>> groups(n);
  std::vector<bool> active(n, true);
  for (std::size_t s = 0; s < n; ++s) groups[s] = {s};

  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = n, bb = n;
    for (std::size_t a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (active[b] && link[a * n + b] < best) {
          best = link[a * n + b];
          ba = a;
          bb = b;
        }
      }
    }
    if (ba == n || best > max_diameter_m) break;
    // Complete-linkage update: distance to the union is the larger one.
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == ba || k == bb) continue;
      const double d = std::max(link[ba * n + k], link[bb * n + k]);
      link[ba * n + k] = link[k * n + ba] = d;
    }
    groups[ba].insert(groups[ba].end(), groups[bb].begin(), groups[bb].end());
    std::sort(groups[ba].begin(), groups[ba].end());
    groups[bb].clear();
    active[bb] = false;
  }

  std::vector<Cluster> out;
  std::vector<GeoPoint> member_pts;
  for (std::size_t s = 0; s < n; ++s) {
    if (!active[s]) continue;
    Cluster c;
    c.members = std::move(groups[s]);
    member_pts.clear();
    for (auto m : c.members) member_pts.push_back(points[m]);
    c.centroid = centroid(member_pts);
    for (std::size_t x = 0; x < c.members.size(); ++x)
      for (std::size_t y = x + 1; y < c.members.size(); ++y)
        c.diameter_m = std::max(c.diameter_m, haversine_distance(member_pts[x], member_pts[y]));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace mobjust
