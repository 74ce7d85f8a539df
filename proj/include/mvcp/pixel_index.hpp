#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvcp/geometry.hpp"

namespace mvcp {

/// Immutable uniform-grid index over projected LiDAR pixels.
///
/// Nearest-neighbour queries are exact: they return the entry with the
/// smallest squared image-plane distance, ties going to the smallest
/// source_index, i.e. the same answer as an exhaustive scan. Safe to query
/// from several threads at once.
class PixelIndex {
 public:
  PixelIndex() = default;
  PixelIndex(std::vector<PixelDepth> entries, double cell_size);

  std::optional<PixelDepth> nearest(double u, double v) const;
  /// Nearest entry if it lies within `radius` (inclusive), else nullopt.
  std::optional<PixelDepth> nearest_within(double u, double v, double radius) const;

  /// Calls f(entry) for every entry with u in [u0, u1) and v in [v0, v1).
  template <typename F>
  void for_each_in_rect(double u0, double v0, double u1, double v1, F&& f) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double cell_size() const { return cell_; }

 private:
  std::optional<PixelDepth> search(double u, double v, double radius) const;
  std::ptrdiff_t cell_x(double u) const;
  std::ptrdiff_t cell_y(double v) const;

  std::vector<PixelDepth> entries_;     // grouped by cell, row-major
  std::vector<std::size_t> cell_start_;  // nx*ny + 1 offsets into entries_
  double cell_ = 1.0;
  double origin_u_ = 0, origin_v_ = 0;
  std::ptrdiff_t nx_ = 0, ny_ = 0;
};

PixelIndex build_pixel_index(std::vector<PixelDepth> projected, double cell_size);

/// Depth of the nearest projected point for each query pixel; nullopt when the
/// nearest point is farther than r_max. Parallel over queries.
std::vector<std::optional<PixelDepth>> associate_depth(std::span<const Eigen::Vector2d> pixels,
                                                       const PixelIndex& index, double r_max);

namespace serial {
std::vector<std::optional<PixelDepth>> associate_depth(std::span<const Eigen::Vector2d> pixels,
                                                       const PixelIndex& index, double r_max);
}  // namespace serial

template <typename F>
void PixelIndex::for_each_in_rect(double u0, double v0, double u1, double v1, F&& f) const {
  if (entries_.empty() || !(u1 > u0) || !(v1 > v0)) return;
  const std::ptrdiff_t x0 = cell_x(u0), x1 = cell_x(u1);
  const std::ptrdiff_t y0 = cell_y(v0), y1 = cell_y(v1);
  for (std::ptrdiff_t y = y0; y <= y1; ++y) {
    for (std::ptrdiff_t x = x0; x <= x1; ++x) {
      const auto c = static_cast<std::size_t>(y * nx_ + x);
      for (std::size_t i = cell_start_[c]; i < cell_start_[c + 1]; ++i) {
        const PixelDepth& e = entries_[i];
        if (e.u >= u0 && e.u < u1 && e.v >= v0 && e.v < v1) f(e);
      }
    }
  }
}

}  // namespace mvcp
