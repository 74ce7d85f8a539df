#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mvcp/box.hpp"
#include "mvcp/cues.hpp"
#include "mvcp/geometry.hpp"

namespace mvcp {

struct SceneObject {
  Box3D box;  // at frame 0, LiDAR frame
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m/s
  ObjectClass cls = ObjectClass::car;
};

/// Spinning LiDAR at the origin of its own frame. Beams are spread evenly over
/// [elevation_min_deg, elevation_max_deg]; each beam fires every
/// azimuth_resolution_deg over the full turn.
struct LidarSpec {
  int beams = 32;
  double elevation_min_deg = -30.0;
  double elevation_max_deg = 10.0;
  double azimuth_resolution_deg = 0.2;
  double max_range = 70.0;
  double dropout = 0.0;  // fraction of returns removed, hash-based and deterministic
};

struct SceneSpec {
  std::vector<SceneObject> objects;
  std::optional<double> ground_z;  // LiDAR frame
  LidarSpec lidar;
  CameraIntrinsics camera;
  RigidTransform lidar_to_car;
  RigidTransform car_to_cam;
  double frame_rate = 10.0;  // Hz
  int num_frames = 1;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  TransformChain chain() const { return {lidar_to_car, RigidTransform::identity(), car_to_cam}; }
  Box3D box_at(std::size_t object, int frame) const;
};

/// Per-pixel ground-truth depth along the optical axis; 0 where nothing is hit.
struct DepthImage {
  int width = 0, height = 0;
  std::vector<double> depth;

  double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
};

struct RenderedFrame {
  std::vector<InstanceMask> masks;  // instance_id = object index + 1, ascending
  DepthImage depth;
};

struct FrameBundle {
  PointCloud cloud;
  std::vector<InstanceMask> masks;
  DepthImage depth;
  std::vector<Box3D> gt_boxes;  // one per scene object, same order
  std::vector<ObjectClass> classes;
  TransformChain calibration;
  CameraIntrinsics intrinsics;
};

/// Ray hit distance along `dir` (not necessarily unit) from `origin`, or
/// nullopt. Hits at t <= 0 are ignored.
std::optional<double> intersect_ray_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const Box3D& box);

PointCloud simulate_lidar(const SceneSpec& spec, int frame);
RenderedFrame render_masks(const SceneSpec& spec, int frame);
/// Frames 0..num_frames-1. Without `with_depth` the depth images are left
/// empty; at full camera resolution they dominate memory.
std::vector<FrameBundle> make_sequence(const SceneSpec& spec, bool with_depth = true);

/// 1600x900 forward camera and roof LiDAR 1.8 m above the ground.
SceneSpec standard_rig();

struct BenchmarkSequence {
  SceneSpec spec;
  std::size_t target = 0;  // index into spec.objects
};

/// The sparse tracking benchmark: one target car per sequence at 10-60 m,
/// plus distractors, 32-beam LiDAR.
std::vector<BenchmarkSequence> sparse_benchmark(int num_sequences, int num_frames, std::uint64_t seed);

namespace serial {
PointCloud simulate_lidar(const SceneSpec& spec, int frame);
}  // namespace serial

}  // namespace mvcp
