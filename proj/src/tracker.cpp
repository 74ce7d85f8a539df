#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "mvcp/track.hpp"

namespace mvcp {

Eigen::Vector3d search_half_extent(ObjectClass cls) {
  return cls == ObjectClass::car ? Eigen::Vector3d(4.8, 4.8, 1.5) : Eigen::Vector3d(1.92, 1.92, 1.5);
}

AugmentedCloud crop_search_region(const AugmentedCloud& cloud, const Box3D& prev, ObjectClass cls) {
  const Eigen::Vector3d half = search_half_extent(cls);
  AugmentedCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d d = (cloud.points[i] - prev.center).cwiseAbs();
    if (d.x() <= half.x() && d.y() <= half.y() && d.z() <= half.z())
      out.push_back(cloud.points[i], cloud.origin[i], cloud.instance_id[i]);
  }
  return out;
}

std::vector<Box3D> TrackState::boxes() const {
  std::vector<Box3D> out;
  out.reserve(poses.size());
  for (std::size_t f = 0; f < poses.size(); ++f) out.push_back(box(f));
  return out;
}

namespace {

// Flat roofs return beam rings that stay fixed in the sensor frame while the
// object moves, so the band stops short of the top as well as the ground.
bool in_height_band(double z, const Eigen::Vector3d& center, const Eigen::Vector3d& size, const BevTrackerConfig& cfg) {
  return z >= center.z() - 0.5 * size.z() + cfg.ground_clearance && z <= center.z() + 0.5 * size.z() - cfg.roof_clearance;
}

struct Candidate {
  long score = -1;
  int yaw_step = 0;
  int ix = 0, iy = 0;

  // Higher score first, then smaller motion.
  bool better_than(const Candidate& o) const {
    if (score != o.score) return score > o.score;
    const auto key = [](const Candidate& c) {
      return std::make_tuple(std::abs(c.yaw_step), c.ix * c.ix + c.iy * c.iy, c.yaw_step, c.ix, c.iy);
    };
    return key(*this) < key(o);
  }
};

// Occupancy raster centred on the previous box centre.
class Raster {
 public:
  Raster(const AugmentedCloud& region, const TrackState& prev, const BevTrackerConfig& cfg, int half_cells)
      : half_(half_cells), side_(2 * half_cells + 1), occ_(static_cast<std::size_t>(side_) * side_, 0) {
    const TrackPose& p = prev.poses.back();
    for (const auto& pt : region.points) {
      if (!in_height_band(pt.z(), p.center, prev.size, cfg)) continue;
      const auto ix = static_cast<long>(std::floor((pt.x() - p.center.x()) / cfg.cell));
      const auto iy = static_cast<long>(std::floor((pt.y() - p.center.y()) / cfg.cell));
      if (std::abs(ix) <= half_ && std::abs(iy) <= half_) {
        occ_[index(ix, iy)] = 1;
        any_ = true;
      }
    }
  }
  bool any() const { return any_; }
  int at(long ix, long iy) const {
    return std::abs(ix) <= half_ && std::abs(iy) <= half_ ? occ_[index(ix, iy)] : 0;
  }

 private:
  std::size_t index(long ix, long iy) const { return static_cast<std::size_t>((iy + half_) * side_ + (ix + half_)); }
  long half_;
  long side_;
  std::vector<unsigned char> occ_;
  bool any_ = false;
};

struct Search {
  int yaw_steps;
  int shift_steps;
  double yaw_step_rad;
  int half_cells;
};

Search make_search(const BevTemplate& tmpl, const BevTrackerConfig& cfg) {
  Search s;
  s.yaw_steps = static_cast<int>(std::lround(cfg.search_yaw_deg / cfg.yaw_step_deg));
  s.shift_steps = static_cast<int>(std::lround(cfg.search_xy / cfg.cell));
  s.yaw_step_rad = cfg.yaw_step_deg * std::numbers::pi / 180.0;
  double radius = 0;
  for (const auto& c : tmpl.cells) radius = std::max(radius, c.norm());
  s.half_cells = s.shift_steps + static_cast<int>(std::ceil(radius / cfg.cell)) + 2;
  return s;
}

Candidate best_for_yaw(int k, const TrackState& prev, const BevTemplate& tmpl, const Raster& raster,
                       const Search& s, const BevTrackerConfig& cfg) {
  const double yaw = prev.poses.back().yaw + k * s.yaw_step_rad;
  const double c = std::cos(yaw), sn = std::sin(yaw);
  std::vector<std::pair<long, long>> offs;
  offs.reserve(tmpl.cells.size());
  for (const auto& cell : tmpl.cells) {
    const double x = c * cell.x() - sn * cell.y(), y = sn * cell.x() + c * cell.y();
    offs.emplace_back(static_cast<long>(std::floor(x / cfg.cell)), static_cast<long>(std::floor(y / cfg.cell)));
  }
  std::sort(offs.begin(), offs.end());
  offs.erase(std::unique(offs.begin(), offs.end()), offs.end());

  Candidate best;
  for (int iy = -s.shift_steps; iy <= s.shift_steps; ++iy) {
    for (int ix = -s.shift_steps; ix <= s.shift_steps; ++ix) {
      Candidate cand{0, k, ix, iy};
      for (const auto& [ox, oy] : offs) cand.score += raster.at(ox + ix, oy + iy);
      if (cand.better_than(best)) best = cand;
    }
  }
  return best;
}

TrackPose pose_from(const TrackState& prev, const Candidate& best, const Search& s, const BevTrackerConfig& cfg) {
  TrackPose out = prev.poses.back();
  out.center.x() += best.ix * cfg.cell;
  out.center.y() += best.iy * cfg.cell;
  out.yaw = wrap_angle(out.yaw + best.yaw_step * s.yaw_step_rad);
  return out;
}

}  // namespace

BevTemplate build_template(const AugmentedCloud& cloud, const Box3D& box, const BevTrackerConfig& config) {
  std::vector<std::pair<long, long>> cells;
  const double hx = 0.5 * box.length() + config.template_margin, hy = 0.5 * box.width() + config.template_margin;
  for (const auto& p : cloud.points) {
    if (!in_height_band(p.z(), box.center, box.size, config)) continue;
    const Eigen::Vector3d q = box.to_local(p);
    if (std::abs(q.x()) > hx || std::abs(q.y()) > hy) continue;
    cells.emplace_back(static_cast<long>(std::floor(q.x() / config.cell)), static_cast<long>(std::floor(q.y() / config.cell)));
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  BevTemplate out;
  out.cells.reserve(cells.size());
  for (const auto& [i, j] : cells) out.cells.emplace_back((i + 0.5) * config.cell, (j + 0.5) * config.cell);
  return out;
}

TrackPose baseline_track_step(const TrackState& prev, const BevTemplate& tmpl, const AugmentedCloud& region,
                              const BevTrackerConfig& config) {
  if (prev.poses.empty()) throw std::invalid_argument("baseline_track_step: empty track state");
  if (tmpl.empty() || region.empty()) return prev.poses.back();
  const Search s = make_search(tmpl, config);
  const Raster raster(region, prev, config, s.half_cells);
  if (!raster.any()) return prev.poses.back();

  const int n = 2 * s.yaw_steps + 1;
  std::vector<Candidate> per_yaw(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) per_yaw[i] = best_for_yaw(i - s.yaw_steps, prev, tmpl, raster, s, config);

  Candidate best;
  for (const auto& c : per_yaw)
    if (c.better_than(best)) best = c;
  return pose_from(prev, best, s, config);
}

namespace serial {

TrackPose baseline_track_step(const TrackState& prev, const BevTemplate& tmpl, const AugmentedCloud& region,
                              const BevTrackerConfig& config) {
  if (prev.poses.empty()) throw std::invalid_argument("baseline_track_step: empty track state");
  if (tmpl.empty() || region.empty()) return prev.poses.back();
  const Search s = make_search(tmpl, config);
  const Raster raster(region, prev, config, s.half_cells);
  if (!raster.any()) return prev.poses.back();
  Candidate best;
  for (int k = -s.yaw_steps; k <= s.yaw_steps; ++k) {
    const Candidate c = best_for_yaw(k, prev, tmpl, raster, s, config);
    if (c.better_than(best)) best = c;
  }
  return pose_from(prev, best, s, config);
}

}  // namespace serial

TrackState run_tracker(std::span<const AugmentedCloud> frames, const Box3D& initial, ObjectClass cls,
                       const BevTrackerConfig& config) {
  TrackState state;
  if (frames.empty()) return state;
  state.size = initial.size;
  state.poses.push_back({initial.center, initial.yaw});
  BevTemplate tmpl = build_template(frames[0], initial, config);
  for (std::size_t f = 1; f < frames.size(); ++f) {
    const AugmentedCloud region = crop_search_region(frames[f], state.last_box(), cls);
    state.poses.push_back(baseline_track_step(state, tmpl, region, config));
    BevTemplate next = build_template(region, state.last_box(), config);
    if (!next.empty()) tmpl = std::move(next);
  }
  return state;
}

}  // namespace mvcp
