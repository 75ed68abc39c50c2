#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mobjust/error.hpp"
#include "mobjust/geo.hpp"

namespace mobjust {

struct IndexedShape {
  std::string id;
  MultiPolygon geometry;
};

/// Uniform lon/lat grid over the union bounding box of a polygon set. Each
/// cell lists every polygon whose bounding box overlaps it, so a lookup only
/// tests candidates from one cell. Immutable after construction.
class GridIndex {
 public:
  GridIndex(std::vector<IndexedShape> shapes, double cell_deg = 0.01)
      : cell_deg_(cell_deg) {
    if (shapes.empty()) throw Error(ErrorKind::EmptyInput, "no polygons to index");
    if (!(cell_deg > 0.0)) throw Error(ErrorKind::InvalidConfig, "cell size must be positive");
    // Sorted ids make the smallest candidate position the lexicographic winner.
    std::sort(shapes.begin(), shapes.end(),
              [](const IndexedShape& a, const IndexedShape& b) { return a.id < b.id; });
    shapes_ = std::move(shapes);
    boxes_.reserve(shapes_.size());
    for (const auto& s : shapes_) {
      if (s.geometry.empty()) throw Error(ErrorKind::EmptyInput, "empty geometry for " + s.id);
      boxes_.push_back(bounding_box(s.geometry));
    }
    bounds_ = boxes_.front();
    for (const auto& b : boxes_) bounds_.expand(b);

    cols_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(
                                          (bounds_.max_lon - bounds_.min_lon) / cell_deg_)) + 1);
    rows_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(
                                          (bounds_.max_lat - bounds_.min_lat) / cell_deg_)) + 1);
    cells_.resize(static_cast<std::size_t>(cols_ * rows_));
    for (std::uint32_t i = 0; i < shapes_.size(); ++i) {
      const auto& b = boxes_[i];
      const auto c0 = col(b.min_lon), c1 = col(b.max_lon);
      const auto r0 = row(b.min_lat), r1 = row(b.max_lat);
      for (auto r = r0; r <= r1; ++r)
        for (auto c = c0; c <= c1; ++c) cells_[static_cast<std::size_t>(r * cols_ + c)].push_back(i);
    }
  }

  /// Position (into ids()) of the containing polygon with the smallest id.
  std::optional<std::size_t> locate_position(const GeoPoint& p) const {
    if (!bounds_.contains(p)) return std::nullopt;
    const auto& cell = cells_[static_cast<std::size_t>(row(p.lat) * cols_ + col(p.lon))];
    for (std::uint32_t i : cell) {  // ascending, hence ascending id
      if (boxes_[i].contains(p) && polygon_contains(shapes_[i].geometry, p)) return i;
    }
    return std::nullopt;
  }

  std::optional<std::string_view> locate(const GeoPoint& p) const {
    auto pos = locate_position(p);
    if (!pos) return std::nullopt;
    return std::string_view(shapes_[*pos].id);
  }

  std::size_t size() const { return shapes_.size(); }
  const IndexedShape& shape(std::size_t pos) const { return shapes_[pos]; }
  const BoundingBox& bounds() const { return bounds_; }
  double cell_deg() const { return cell_deg_; }
  std::size_t cell_count() const { return cells_.size(); }

  const std::vector<std::uint32_t>& cell_candidates(const GeoPoint& p) const {
    return cells_[static_cast<std::size_t>(row(p.lat) * cols_ + col(p.lon))];
  }

 private:
  std::int64_t col(double lon) const {
    auto c = static_cast<std::int64_t>(std::floor((lon - bounds_.min_lon) / cell_deg_));
    return std::clamp<std::int64_t>(c, 0, cols_ - 1);
  }
  std::int64_t row(double lat) const {
    auto r = static_cast<std::int64_t>(std::floor((lat - bounds_.min_lat) / cell_deg_));
    return std::clamp<std::int64_t>(r, 0, rows_ - 1);
  }

  double cell_deg_;
  std::vector<IndexedShape> shapes_;
  std::vector<BoundingBox> boxes_;
  BoundingBox bounds_;
  std::int64_t cols_ = 1;
  std::int64_t rows_ = 1;
  std::vector<std::vector<std::uint32_t>> cells_;
};

inline GridIndex build_index(std::vector<IndexedShape> shapes, double cell_deg = 0.01) {
  return GridIndex(std::move(shapes), cell_deg);
}

}  // namespace mobjust
