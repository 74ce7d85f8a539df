#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvcp/cues.hpp"
#include "mvcp/rng.hpp"

namespace mvcp {

void VirtualCueConfig::validate() const {
  if (lambda < 1) throw std::invalid_argument("lambda must be >= 1");
  const int s = static_cast<int>(strategy);
  if (s < 1 || s > 3) throw std::invalid_argument("strategy must be 1, 2 or 3");
  if (!(d_min < d_max)) throw std::invalid_argument("d_min must be < d_max");
  if (!(r_max > 0) || !std::isfinite(r_max)) throw std::invalid_argument("r_max must be positive");
}

int cue_budget(const VirtualCueConfig& config, double object_distance) {
  const double lam = config.lambda;
  const double t = std::clamp((object_distance - config.d_min) / (config.d_max - config.d_min), 0.0, 1.0);
  switch (config.strategy) {
    case BudgetStrategy::near_dense:
      return static_cast<int>(std::lround(2.0 * lam - t * lam));
    case BudgetStrategy::far_dense:
      return static_cast<int>(std::lround(lam + t * lam));
    case BudgetStrategy::fixed:
      break;
  }
  return config.lambda;
}

std::size_t AugmentedCloud::virtual_count() const {
  return static_cast<std::size_t>(std::count(origin.begin(), origin.end(), PointOrigin::virtual_cue));
}

namespace {

double median(std::vector<double>& values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

struct MaskResult {
  std::vector<VirtualCue> cues;
  MaskCueStats stats;
};

MaskResult cues_for_mask(const InstanceMask& mask, const PixelIndex& index, const CameraIntrinsics& intr,
                         const RigidTransform& cam_to_lidar, const VirtualCueConfig& config) {
  MaskResult r;
  r.stats.instance_id = mask.instance_id;
  if (mask.set_count() == 0) {
    r.stats.skipped = true;
    return r;
  }

  const PixelBox& b = mask.bbox;
  std::vector<double> depths;
  index.for_each_in_rect(b.u, b.v, b.u + b.w, b.v + b.h, [&](const PixelDepth& e) {
    if (mask.contains(static_cast<int>(std::floor(e.u)), static_cast<int>(std::floor(e.v))))
      depths.push_back(e.depth);
  });
  r.stats.lidar_in_mask = depths.size();
  if (depths.empty()) {
    // Sparse far objects may have no return inside the silhouette; fall back
    // to the bbox dilated by the association radius.
    const double pad = config.r_max;
    index.for_each_in_rect(b.u - pad, b.v - pad, b.u + b.w + pad, b.v + b.h + pad,
                           [&](const PixelDepth& e) { depths.push_back(e.depth); });
  }
  if (depths.empty()) {
    r.stats.skipped = true;
    return r;
  }

  r.stats.distance = median(depths);
  r.stats.budget = cue_budget(config, r.stats.distance);
  const auto pixels = sample_mask_pixels(mask, r.stats.budget, mix_seed(config.seed, static_cast<std::uint64_t>(mask.instance_id)));
  r.stats.sampled = pixels.size();

  std::vector<Eigen::Vector2d> queries;
  queries.reserve(pixels.size());
  for (const auto& p : pixels) queries.push_back(p.center());
  const auto matches = serial::associate_depth(queries, index, config.r_max);

  r.cues.reserve(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (!matches[i]) {
      ++r.stats.rejected;
      continue;
    }
    const Eigen::Vector3d p_cam = back_project(intr, queries[i].x(), queries[i].y(), matches[i]->depth);
    r.cues.push_back({cam_to_lidar * p_cam, mask.instance_id, pixels[i], matches[i]->depth, matches[i]->source_index});
  }
  r.stats.accepted = r.cues.size();
  return r;
}

}  // namespace

CueGeneration generate_virtual_cues(const PointCloud& cloud, std::span<const InstanceMask> masks,
                                    const CameraIntrinsics& intr, const TransformChain& chain,
                                    const VirtualCueConfig& config) {
  config.validate();
  CueGeneration out;
  if (masks.empty()) return out;

  const PixelIndex index = build_pixel_index(project(intr, chain, cloud), config.r_max);
  const RigidTransform cam_to_lidar = chain.cam_to_lidar();

  std::vector<MaskResult> per_mask(masks.size());
  const auto n = static_cast<std::ptrdiff_t>(masks.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t m = 0; m < n; ++m) per_mask[m] = cues_for_mask(masks[m], index, intr, cam_to_lidar, config);

  for (auto& r : per_mask) {
    out.cues.insert(out.cues.end(), r.cues.begin(), r.cues.end());
    out.stats.push_back(r.stats);
  }
  return out;
}

AugmentedCloud augment_cloud(const PointCloud& raw, std::span<const VirtualCue> cues) {
  AugmentedCloud out;
  const std::size_t n = raw.size() + cues.size();
  out.points.reserve(n);
  out.origin.reserve(n);
  out.instance_id.reserve(n);
  for (const auto& p : raw.points) out.push_back(p, PointOrigin::real, -1);
  for (const auto& c : cues) out.push_back(c.position, PointOrigin::virtual_cue, c.instance_id);
  return out;
}

}  // namespace mvcp
