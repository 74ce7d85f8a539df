#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvcp/geometry.hpp"
#include "mvcp/pixel_index.hpp"

namespace mvcp {

struct PixelCoord {
  int u = 0, v = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
  /// Continuous image coordinate of the pixel centre.
  Eigen::Vector2d center() const { return {u + 0.5, v + 0.5}; }
};

struct PixelBox {
  int u = 0, v = 0, w = 0, h = 0;
  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

/// One instance from a 2D segmentor: a bounding box plus membership bitmap
/// (w*h, row-major, relative to the box origin).
struct InstanceMask {
  int instance_id = 0;
  PixelBox bbox;
  std::vector<std::uint8_t> bitmap;

  bool contains(int u, int v) const {
    const int x = u - bbox.u, y = v - bbox.v;
    return x >= 0 && y >= 0 && x < bbox.w && y < bbox.h &&
           bitmap[static_cast<std::size_t>(y) * bbox.w + x] != 0;
  }
  std::size_t set_count() const;
  /// bbox inside the image, bitmap sized w*h, at least one set pixel.
  bool is_valid(int image_width, int image_height) const;
  /// Set pixels in row-major image order.
  std::vector<PixelCoord> pixels() const;
};

/// How the per-object cue budget depends on object distance.
enum class BudgetStrategy : int {
  near_dense = 1,  // 2*lambda near, lambda far
  far_dense = 2,   // lambda near, 2*lambda far
  fixed = 3,       // lambda everywhere
};

struct VirtualCueConfig {
  int lambda = 128;
  BudgetStrategy strategy = BudgetStrategy::fixed;
  double d_min = 0.0;   // metres
  double d_max = 60.0;  // metres
  double r_max = 15.0;  // pixels
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct VirtualCue {
  Eigen::Vector3d position;  // LiDAR frame
  int instance_id = 0;
  PixelCoord pixel;
  double depth = 0;               // associated depth, metres
  std::size_t source_index = 0;   // LiDAR point the depth came from
};

struct MaskCueStats {
  int instance_id = 0;
  std::size_t lidar_in_mask = 0;
  double distance = 0;  // median depth used for budgeting; 0 when skipped
  int budget = 0;
  std::size_t sampled = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool skipped = false;  // no LiDAR support near the mask
};

struct CueGeneration {
  std::vector<VirtualCue> cues;
  std::vector<MaskCueStats> stats;  // one per input mask, same order
};

enum class PointOrigin : std::uint8_t { real = 0, virtual_cue = 1 };

/// Raw points followed by virtual cues, with per-point provenance.
struct AugmentedCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<PointOrigin> origin;
  std::vector<int> instance_id;  // -1 for real points

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  std::size_t virtual_count() const;
  void push_back(const Eigen::Vector3d& p, PointOrigin o, int id) {
    points.push_back(p);
    origin.push_back(o);
    instance_id.push_back(id);
  }
};

/// Stratified pick of min(n, set pixels) distinct mask pixels. The bbox is
/// split into a grid of roughly n cells; each cell gets a share of n
/// proportional to its set-pixel count (largest remainder) and draws that
/// many pixels without replacement. Throws std::invalid_argument on an empty
/// mask or n < 1.
std::vector<PixelCoord> sample_mask_pixels(const InstanceMask& mask, int n, std::uint64_t seed);

int cue_budget(const VirtualCueConfig& config, double object_distance);

/// Lifts mask pixels to LiDAR-frame points using nearest projected LiDAR
/// depth. Deterministic for fixed inputs.
CueGeneration generate_virtual_cues(const PointCloud& cloud, std::span<const InstanceMask> masks,
                                    const CameraIntrinsics& intr, const TransformChain& chain,
                                    const VirtualCueConfig& config);

AugmentedCloud augment_cloud(const PointCloud& raw, std::span<const VirtualCue> cues);

/// Simulates a lower-resolution segmentor: nearest-neighbour downscale by
/// `factor` followed by upscale back to full resolution. Returns an empty
/// bitmap (set_count() == 0) if the mask vanishes.
InstanceMask degrade_mask(const InstanceMask& mask, int factor);

}  // namespace mvcp
