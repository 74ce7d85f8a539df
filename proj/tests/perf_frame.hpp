#pragma once

// Synthetic workload for the augmentation timing target: one 100k-point
// frame with 20 elliptical masks.

#include <cmath>
#include <vector>

#include "mvcp/cues.hpp"
#include "mvcp/rng.hpp"
#include "mvcp/scenesim.hpp"

namespace mvcp::testing {

struct PerfFrame {
  PointCloud cloud;
  std::vector<InstanceMask> masks;
  CameraIntrinsics intr;
  TransformChain chain;
};

inline PerfFrame make_perf_frame(std::size_t num_points = 100000, int num_masks = 20, std::uint64_t seed = 7) {
  const SceneSpec rig = standard_rig();
  PerfFrame f;
  f.intr = rig.camera;
  f.chain = rig.chain();
  const RigidTransform cam_to_lidar = f.chain.cam_to_lidar();
  SplitMix64 rng(seed);
  f.cloud.points.reserve(num_points);
  for (std::size_t i = 0; i < num_points; ++i) {
    // Three quarters land in the image, the rest behind or to the side.
    if (i % 4 == 3) {
      f.cloud.points.emplace_back(rng.uniform(-60, 0), rng.uniform(-40, 40), rng.uniform(-2, 2));
      continue;
    }
    const double u = rng.uniform(0, f.intr.width), v = rng.uniform(0, f.intr.height), d = rng.uniform(5, 60);
    f.cloud.points.push_back(cam_to_lidar * back_project(f.intr, u, v, d));
  }
  for (int m = 0; m < num_masks; ++m) {
    InstanceMask mask;
    mask.instance_id = m + 1;
    const int w = 60 + static_cast<int>(rng.below(140)), h = 40 + static_cast<int>(rng.below(100));
    mask.bbox = {static_cast<int>(rng.below(static_cast<std::uint64_t>(f.intr.width - w))),
                 static_cast<int>(rng.below(static_cast<std::uint64_t>(f.intr.height - h))), w, h};
    mask.bitmap.assign(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double dx = (x + 0.5) / w - 0.5, dy = (y + 0.5) / h - 0.5;
        if (dx * dx + dy * dy <= 0.25) mask.bitmap[static_cast<std::size_t>(y) * w + x] = 1;
      }
    f.masks.push_back(std::move(mask));
  }
  return f;
}

}  // namespace mvcp::testing
