#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mvcp {

/// Rigid-body transform. Maps a point p to rotation * p + translation.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Eigen::Vector3d& t);
  /// Rotation of `angle` radians about +z.
  static RigidTransform rot_z(double angle);
  /// Builds from a homogeneous 4x4 matrix; throws std::invalid_argument if the
  /// rotation block is not orthonormal or the last row is not (0,0,0,1).
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);

  Eigen::Matrix4d matrix() const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  /// max |R^T R - I| entry.
  double orthonormality_error() const;
  bool is_valid(double tol = 1e-9) const;
};

/// Result applies `b` first, then `a`.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

/// Pinhole intrinsics. Pixel (i, j) covers [i, i+1) x [j, j+1); its centre is
/// at (i + 0.5, j + 0.5).
struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  bool is_valid() const;
  bool contains(double u, double v) const { return u >= 0 && v >= 0 && u < width && v < height; }
};

/// LiDAR -> car -> (ego-motion compensated) car -> camera.
struct TransformChain {
  RigidTransform lidar_to_car;
  RigidTransform ego_motion;
  RigidTransform car_to_cam;

  /// car_to_cam * ego_motion * lidar_to_car
  RigidTransform lidar_to_cam() const;
  RigidTransform cam_to_lidar() const { return invert(lidar_to_cam()); }
};

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<float> intensity;  // empty or one per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool all_finite() const;
};

/// A LiDAR point projected onto the image plane.
struct PixelDepth {
  double u = 0, v = 0;
  double depth = 0;  // along the optical axis, metres
  std::size_t source_index = 0;
};

PointCloud apply(const RigidTransform& t, const PointCloud& cloud);

/// Projects `cloud` (LiDAR frame) into the image. Points behind the camera or
/// outside [0,width) x [0,height) are dropped; output order follows input
/// order. Parallel over points.
std::vector<PixelDepth> project(const CameraIntrinsics& intr, const TransformChain& chain,
                                const PointCloud& cloud);

/// Single camera-frame point. nullopt when behind the camera or off-image.
std::optional<PixelDepth> project_point(const CameraIntrinsics& intr, const Eigen::Vector3d& p_cam,
                                        std::size_t source_index = 0);

/// Camera-frame point at pixel (u, v) and depth d. Throws std::invalid_argument
/// on non-positive depth.
Eigen::Vector3d back_project(const CameraIntrinsics& intr, double u, double v, double d);

namespace serial {
/// Single-threaded reference for mvcp::project.
std::vector<PixelDepth> project(const CameraIntrinsics& intr, const TransformChain& chain,
                                const PointCloud& cloud);
}  // namespace serial

}  // namespace mvcp
