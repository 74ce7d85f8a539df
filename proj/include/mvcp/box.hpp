#pragma once

#include <array>
#include <string_view>

#include <Eigen/Core>

namespace mvcp {

enum class ObjectClass { car, pedestrian };

std::string_view to_string(ObjectClass c);
/// Throws std::invalid_argument on anything but "car" / "pedestrian".
ObjectClass parse_object_class(std::string_view s);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// 7-DoF box. `size` is (w, l, h): l runs along the heading (local +x),
/// w along local +y, h along +z. `yaw` rotates about +z.
struct Box3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  double yaw = 0.0;

  double width() const { return size.x(); }
  double length() const { return size.y(); }
  double height() const { return size.z(); }
  double volume() const { return size.prod(); }
  bool is_valid() const;

  /// World point -> box-local coordinates (heading along +x).
  Eigen::Vector3d to_local(const Eigen::Vector3d& p) const;
  bool contains(const Eigen::Vector3d& p) const;
  /// Footprint corners, counter-clockwise.
  std::array<Eigen::Vector2d, 4> footprint() const;
  std::array<Eigen::Vector3d, 8> corners() const;
};

/// Intersection over union of two yaw-rotated boxes: exact convex polygon
/// clipping of the footprints times the z-interval overlap. Symmetric
/// bit-for-bit.
double iou3d(const Box3D& a, const Box3D& b);

/// Area of the intersection of two boxes' footprints.
double footprint_overlap(const Box3D& a, const Box3D& b);

}  // namespace mvcp
