#pragma once

// Reference computations written directly from the definitions, without
// touching the library's implementations. Slow on purpose.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mvcp/box.hpp"
#include "mvcp/geometry.hpp"

namespace oracle {

// Exhaustive nearest neighbour: smallest squared distance, then smallest
// source_index. nullopt if the winner is farther than r (or nothing exists).
inline std::optional<mvcp::PixelDepth> nearest(const std::vector<mvcp::PixelDepth>& entries, double u, double v,
                                               double r) {
  std::optional<mvcp::PixelDepth> best;
  double best_d2 = 0;
  for (const auto& e : entries) {
    const double d2 = (e.u - u) * (e.u - u) + (e.v - v) * (e.v - v);
    if (!best || d2 < best_d2 || (d2 == best_d2 && e.source_index < best->source_index)) {
      best = e;
      best_d2 = d2;
    }
  }
  if (best && best_d2 > r * r) return std::nullopt;
  return best;
}

// Pinhole projection of a camera-frame point, straight from u = fx x / z + cx.
inline Eigen::Vector3d pinhole(const mvcp::CameraIntrinsics& k, const Eigen::Vector3d& p) {
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy, p.z()};
}

// Point-in-oriented-box test written from the box axes.
inline bool inside_footprint(const mvcp::Box3D& b, double x, double y) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double dx = x - b.center.x(), dy = y - b.center.y();
  const double along = c * dx + s * dy;    // heading axis, half-length l/2
  const double across = -s * dx + c * dy;  // lateral axis, half-width w/2
  return std::abs(along) <= 0.5 * b.size.y() && std::abs(across) <= 0.5 * b.size.x();
}

// IoU by counting cell centres of an n x n x n grid laid over the bounding
// region of the intersection. Along z every cell centre of the overlap
// interval is inside both boxes, so the 3D count is the 2D count times n and
// the z extent enters exactly.
inline double iou_raster(const mvcp::Box3D& a, const mvcp::Box3D& b, int n = 200) {
  const double z0 = std::max(a.center.z() - 0.5 * a.size.z(), b.center.z() - 0.5 * b.size.z());
  const double z1 = std::min(a.center.z() + 0.5 * a.size.z(), b.center.z() + 0.5 * b.size.z());
  if (z1 <= z0) return 0.0;
  auto xy_bounds = [](const mvcp::Box3D& q) {
    const double c = std::abs(std::cos(q.yaw)), s = std::abs(std::sin(q.yaw));
    const double ex = 0.5 * (c * q.size.y() + s * q.size.x()), ey = 0.5 * (s * q.size.y() + c * q.size.x());
    return Eigen::Vector4d(q.center.x() - ex, q.center.x() + ex, q.center.y() - ey, q.center.y() + ey);
  };
  const Eigen::Vector4d ba = xy_bounds(a), bb = xy_bounds(b);
  const double x0 = std::max(ba[0], bb[0]), x1 = std::min(ba[1], bb[1]);
  const double y0 = std::max(ba[2], bb[2]), y1 = std::min(ba[3], bb[3]);
  if (x1 <= x0 || y1 <= y0) return 0.0;
  const double hx = (x1 - x0) / n, hy = (y1 - y0) / n, hz = (z1 - z0) / n;
  long count_xy = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = x0 + (i + 0.5) * hx, y = y0 + (j + 0.5) * hy;
      if (inside_footprint(a, x, y) && inside_footprint(b, x, y)) ++count_xy;
    }
  const double inter = static_cast<double>(count_xy) * n * hx * hy * hz;
  const double va = a.size.prod(), vb = b.size.prod();
  return inter / (va + vb - inter);
}

// Per-frame OPE contributions counted in closed form: the number of IoU
// thresholds k/100 (k = 0..99) strictly below iou, and of error thresholds
// 2k/100 (k = 1..100) strictly above err. Valid away from exact threshold
// values.
inline double success_closed_form(const std::vector<double>& ious) {
  double total = 0;
  for (double v : ious) total += v <= 0 ? 0 : std::min(100.0, std::ceil(v * 100.0));
  return total / static_cast<double>(ious.size());
}

inline double precision_closed_form(const std::vector<double>& errs) {
  double total = 0;
  for (double e : errs) total += 100.0 - std::min(100.0, std::floor(e * 50.0));
  return total / static_cast<double>(errs.size());
}

}  // namespace oracle
