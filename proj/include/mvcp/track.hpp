#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvcp/box.hpp"
#include "mvcp/cues.hpp"

namespace mvcp {

/// Half-extents of the axis-aligned search region around the previous box.
Eigen::Vector3d search_half_extent(ObjectClass cls);

/// Points within the class search region centred on `prev` (inclusive
/// bounds). Relative order and origin flags are preserved.
AugmentedCloud crop_search_region(const AugmentedCloud& cloud, const Box3D& prev, ObjectClass cls);

struct TrackPose {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double yaw = 0.0;
};

/// Per-frame 4-DoF poses with the size fixed from the first frame.
struct TrackState {
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  std::vector<TrackPose> poses;

  Box3D box(std::size_t frame) const { return {poses.at(frame).center, size, poses.at(frame).yaw}; }
  Box3D last_box() const { return box(poses.size() - 1); }
  std::vector<Box3D> boxes() const;
};

struct BevTrackerConfig {
  double cell = 0.1;              // metres
  double search_xy = 2.0;         // +- metres
  double search_yaw_deg = 10.0;   // +- degrees
  double yaw_step_deg = 2.0;
  double ground_clearance = 0.25;  // points this close to the box bottom are ignored
  double roof_clearance = 0.1;     // and this close to the top
  double template_margin = 0.2;    // footprint padding when collecting template points
};

/// Target appearance in bird's-eye view: occupied cells in the box-local
/// frame, stored as cell-centre coordinates.
struct BevTemplate {
  std::vector<Eigen::Vector2d> cells;
  bool empty() const { return cells.empty(); }
};

BevTemplate build_template(const AugmentedCloud& cloud, const Box3D& box, const BevTrackerConfig& config = {});

/// One step of the correlation tracker: rasterises `region` around the
/// previous pose and returns the (dx, dy, dyaw) candidate whose rotated
/// template overlaps the most occupied cells. Ties go to the smallest yaw
/// change, then the smallest shift. Returns the previous pose when the
/// region or template is empty.
TrackPose baseline_track_step(const TrackState& prev, const BevTemplate& tmpl, const AugmentedCloud& region,
                              const BevTrackerConfig& config = {});

/// One-pass run from the ground-truth initial box. frames[0] seeds the template.
TrackState run_tracker(std::span<const AugmentedCloud> frames, const Box3D& initial, ObjectClass cls,
                       const BevTrackerConfig& config = {});

namespace serial {
TrackPose baseline_track_step(const TrackState& prev, const BevTemplate& tmpl, const AugmentedCloud& region,
                              const BevTrackerConfig& config = {});
}  // namespace serial

}  // namespace mvcp
