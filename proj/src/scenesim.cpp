#include "mvcp/scenesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mvcp/rng.hpp"

namespace mvcp {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int object = -1;  // -1 ground
};

// Closest hit among boxes and the ground plane, limited to t <= t_max.
Hit cast(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const std::vector<Box3D>& boxes,
         const std::optional<double>& ground_z, double t_max) {
  Hit best;
  best.t = t_max;
  bool found = false;
  if (ground_z && dir.z() < 0.0) {
    const double t = (*ground_z - origin.z()) / dir.z();
    if (t > 0.0 && t <= best.t) {
      best = {t, -1};
      found = true;
    }
  }
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    if (auto t = intersect_ray_box(origin, dir, boxes[k]); t && *t <= best.t && (!found || *t < best.t)) {
      best = {*t, static_cast<int>(k)};
      found = true;
    }
  }
  if (!found) best.t = std::numeric_limits<double>::infinity();
  return best;
}

std::vector<Box3D> boxes_at(const SceneSpec& spec, int frame) {
  std::vector<Box3D> boxes;
  boxes.reserve(spec.objects.size());
  for (std::size_t k = 0; k < spec.objects.size(); ++k) boxes.push_back(spec.box_at(k, frame));
  return boxes;
}

Eigen::Vector3d beam_direction(const LidarSpec& lidar, int beam, int step) {
  const double el = lidar.beams > 1 ? lidar.elevation_min_deg + (lidar.elevation_max_deg - lidar.elevation_min_deg) * beam /
                                                                    (lidar.beams - 1)
                                    : lidar.elevation_min_deg;
  const double az = step * lidar.azimuth_resolution_deg * kDegToRad;
  const double ce = std::cos(el * kDegToRad), se = std::sin(el * kDegToRad);
  return {ce * std::cos(az), ce * std::sin(az), se};
}

int azimuth_steps(const LidarSpec& lidar) {
  return static_cast<int>(std::floor(360.0 / lidar.azimuth_resolution_deg + 1e-9));
}

bool dropped(const SceneSpec& spec, int frame, std::uint64_t ray) {
  if (spec.lidar.dropout <= 0.0) return false;
  SplitMix64 g(mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(frame)), ray));
  return g.uniform() < spec.lidar.dropout;
}

}  // namespace

void SceneSpec::validate() const {
  if (!camera.is_valid()) throw std::invalid_argument("camera: invalid intrinsics");
  if (!lidar_to_car.is_valid()) throw std::invalid_argument("lidar_to_car: not a rigid transform");
  if (!car_to_cam.is_valid()) throw std::invalid_argument("car_to_cam: not a rigid transform");
  if (!(lidar.max_range > 0)) throw std::invalid_argument("lidar.max_range must be positive");
  if (lidar.beams < 1) throw std::invalid_argument("lidar.beams must be >= 1");
  if (!(lidar.azimuth_resolution_deg > 0)) throw std::invalid_argument("lidar.azimuth_resolution_deg must be positive");
  if (lidar.dropout < 0 || lidar.dropout >= 1) throw std::invalid_argument("lidar.dropout must be in [0, 1)");
  if (!(frame_rate > 0)) throw std::invalid_argument("frame_rate must be positive");
  if (num_frames < 1) throw std::invalid_argument("num_frames must be >= 1");
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const Box3D& b = objects[k].box;
    if (!b.is_valid()) throw std::invalid_argument("objects[" + std::to_string(k) + "].box: invalid box");
    if (ground_z && b.center.z() - 0.5 * b.height() < *ground_z - 1e-9)
      throw std::invalid_argument("objects[" + std::to_string(k) + "].box: below ground plane");
  }
}

Box3D SceneSpec::box_at(std::size_t object, int frame) const {
  Box3D b = objects.at(object).box;
  b.center += objects[object].velocity * (static_cast<double>(frame) / frame_rate);
  return b;
}

std::optional<double> intersect_ray_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const Box3D& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const Eigen::Vector3d o = box.to_local(origin);
  const Eigen::Vector3d d{c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z()};
  const Eigen::Vector3d half{0.5 * box.length(), 0.5 * box.width(), 0.5 * box.height()};

  double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-300) {
      if (std::abs(o[i]) > half[i]) return std::nullopt;
      continue;
    }
    double ta = (-half[i] - o[i]) / d[i], tb = (half[i] - o[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 > 0.0) return t0;
  if (t1 > 0.0) return t1;
  return std::nullopt;
}

PointCloud simulate_lidar(const SceneSpec& spec, int frame) {
  if (frame < 0 || frame >= spec.num_frames) throw std::out_of_range("simulate_lidar: frame out of range");
  const std::vector<Box3D> boxes = boxes_at(spec, frame);
  const int steps = azimuth_steps(spec.lidar);
  const std::ptrdiff_t rays = static_cast<std::ptrdiff_t>(spec.lidar.beams) * steps;
  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();

  std::vector<Eigen::Vector3d> staged(static_cast<std::size_t>(rays));
  std::vector<unsigned char> keep(static_cast<std::size_t>(rays), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rays; ++r) {
    const int beam = static_cast<int>(r / steps), step = static_cast<int>(r % steps);
    const Eigen::Vector3d dir = beam_direction(spec.lidar, beam, step);
    const Hit h = cast(origin, dir, boxes, spec.ground_z, spec.lidar.max_range);
    if (std::isfinite(h.t) && !dropped(spec, frame, static_cast<std::uint64_t>(r))) {
      staged[r] = origin + h.t * dir;
      keep[r] = 1;
    }
  }
  PointCloud cloud;
  for (std::ptrdiff_t r = 0; r < rays; ++r)
    if (keep[r]) cloud.points.push_back(staged[r]);
  return cloud;
}

namespace serial {

PointCloud simulate_lidar(const SceneSpec& spec, int frame) {
  if (frame < 0 || frame >= spec.num_frames) throw std::out_of_range("simulate_lidar: frame out of range");
  const std::vector<Box3D> boxes = boxes_at(spec, frame);
  const int steps = azimuth_steps(spec.lidar);
  PointCloud cloud;
  std::uint64_t r = 0;
  for (int beam = 0; beam < spec.lidar.beams; ++beam) {
    for (int step = 0; step < steps; ++step, ++r) {
      const Eigen::Vector3d dir = beam_direction(spec.lidar, beam, step);
      const Hit h = cast(Eigen::Vector3d::Zero(), dir, boxes, spec.ground_z, spec.lidar.max_range);
      if (std::isfinite(h.t) && !dropped(spec, frame, r)) cloud.points.push_back(h.t * dir);
    }
  }
  return cloud;
}

}  // namespace serial

RenderedFrame render_masks(const SceneSpec& spec, int frame) {
  if (frame < 0 || frame >= spec.num_frames) throw std::out_of_range("render_masks: frame out of range");
  const CameraIntrinsics& cam = spec.camera;
  const std::vector<Box3D> boxes = boxes_at(spec, frame);
  const RigidTransform lidar_to_cam = spec.chain().lidar_to_cam();
  const RigidTransform cam_to_lidar = invert(lidar_to_cam);
  const Eigen::Vector3d eye = cam_to_lidar.translation;
  const auto npix = static_cast<std::size_t>(cam.width) * cam.height;

  auto ray_dir = [&](int u, int v) {
    const Eigen::Vector3d d_cam{(u + 0.5 - cam.cx) / cam.fx, (v + 0.5 - cam.cy) / cam.fy, 1.0};
    return Eigen::Vector3d(cam_to_lidar.rotation * d_cam);
  };

  // With d_cam.z == 1 the ray parameter is the optical-axis depth.
  RenderedFrame out;
  out.depth.width = cam.width;
  out.depth.height = cam.height;
  out.depth.depth.assign(npix, 0.0);
  std::vector<int> ids(npix, 0);
  std::vector<double> nearest(npix, std::numeric_limits<double>::infinity());

  if (spec.ground_z) {
#pragma omp parallel for schedule(static)
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        const Eigen::Vector3d d = ray_dir(u, v);
        if (d.z() < 0.0) {
          const double t = (*spec.ground_z - eye.z()) / d.z();
          if (t > 0.0) nearest[static_cast<std::size_t>(v) * cam.width + u] = t;
        }
      }
    }
  }

  for (std::size_t k = 0; k < boxes.size(); ++k) {
    int u0 = 0, v0 = 0, u1 = cam.width, v1 = cam.height;
    bool in_front = true;
    double umin = std::numeric_limits<double>::infinity(), umax = -umin, vmin = umin, vmax = -umin;
    for (const auto& c : boxes[k].corners()) {
      const Eigen::Vector3d p = lidar_to_cam * c;
      if (p.z() <= 1e-6) {
        in_front = false;
        break;
      }
      umin = std::min(umin, cam.fx * p.x() / p.z() + cam.cx);
      umax = std::max(umax, cam.fx * p.x() / p.z() + cam.cx);
      vmin = std::min(vmin, cam.fy * p.y() / p.z() + cam.cy);
      vmax = std::max(vmax, cam.fy * p.y() / p.z() + cam.cy);
    }
    if (in_front) {
      u0 = std::clamp(static_cast<int>(std::floor(umin)) - 1, 0, cam.width);
      u1 = std::clamp(static_cast<int>(std::ceil(umax)) + 1, 0, cam.width);
      v0 = std::clamp(static_cast<int>(std::floor(vmin)) - 1, 0, cam.height);
      v1 = std::clamp(static_cast<int>(std::ceil(vmax)) + 1, 0, cam.height);
    }
#pragma omp parallel for schedule(static)
    for (int v = v0; v < v1; ++v) {
      for (int u = u0; u < u1; ++u) {
        const std::size_t i = static_cast<std::size_t>(v) * cam.width + u;
        if (auto t = intersect_ray_box(eye, ray_dir(u, v), boxes[k]); t && *t < nearest[i]) {
          nearest[i] = *t;
          ids[i] = static_cast<int>(k) + 1;
        }
      }
    }
  }

  for (std::size_t i = 0; i < npix; ++i)
    if (std::isfinite(nearest[i])) out.depth.depth[i] = nearest[i];

  // Tight bbox + bitmap per visible instance.
  const int n_obj = static_cast<int>(boxes.size());
  std::vector<PixelBox> bb(static_cast<std::size_t>(n_obj) + 1, {cam.width, cam.height, -1, -1});
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const int id = ids[static_cast<std::size_t>(v) * cam.width + u];
      if (id == 0) continue;
      auto& b = bb[static_cast<std::size_t>(id)];
      b.u = std::min(b.u, u);
      b.v = std::min(b.v, v);
      b.w = std::max(b.w, u);  // max u until finalised
      b.h = std::max(b.h, v);
    }
  }
  for (int id = 1; id <= n_obj; ++id) {
    const PixelBox& r = bb[static_cast<std::size_t>(id)];
    if (r.w < 0) continue;
    InstanceMask m;
    m.instance_id = id;
    m.bbox = {r.u, r.v, r.w - r.u + 1, r.h - r.v + 1};
    m.bitmap.assign(static_cast<std::size_t>(m.bbox.w) * m.bbox.h, 0);
    for (int y = 0; y < m.bbox.h; ++y)
      for (int x = 0; x < m.bbox.w; ++x)
        if (ids[static_cast<std::size_t>(m.bbox.v + y) * cam.width + m.bbox.u + x] == id)
          m.bitmap[static_cast<std::size_t>(y) * m.bbox.w + x] = 1;
    out.masks.push_back(std::move(m));
  }
  return out;
}

std::vector<FrameBundle> make_sequence(const SceneSpec& spec, bool with_depth) {
  spec.validate();
  std::vector<FrameBundle> frames(static_cast<std::size_t>(spec.num_frames));
  for (int f = 0; f < spec.num_frames; ++f) {
    FrameBundle& b = frames[static_cast<std::size_t>(f)];
    b.cloud = simulate_lidar(spec, f);
    RenderedFrame r = render_masks(spec, f);
    b.masks = std::move(r.masks);
    if (with_depth) b.depth = std::move(r.depth);
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
      b.gt_boxes.push_back(spec.box_at(k, f));
      b.classes.push_back(spec.objects[k].cls);
    }
    b.calibration = spec.chain();
    b.intrinsics = spec.camera;
  }
  return frames;
}

SceneSpec standard_rig() {
  SceneSpec spec;
  spec.camera = {1266.0, 1266.0, 800.0, 450.0, 1600, 900};
  // Car frame: x forward, y left, z up, origin on the ground.
  spec.lidar_to_car = RigidTransform::from_translation({0.9, 0.0, 1.8});
  RigidTransform cam_to_car;
  cam_to_car.rotation << 0, 0, 1,
                        -1, 0, 0,
                         0, -1, 0;
  cam_to_car.translation = {1.7, 0.0, 1.5};
  spec.car_to_cam = invert(cam_to_car);
  spec.ground_z = -1.8;
  return spec;
}

std::vector<BenchmarkSequence> sparse_benchmark(int num_sequences, int num_frames, std::uint64_t seed) {
  std::vector<BenchmarkSequence> out;
  const double ground = -1.8;
  const double dt_total = (num_frames - 1) / 10.0;

  auto in_view = [&](const Eigen::Vector3d& c) {
    const double r = std::hypot(c.x(), c.y());
    return c.x() > 4.0 && std::abs(std::atan2(c.y(), c.x())) < 0.45 && r < 66.0;
  };

  for (int i = 0; i < num_sequences; ++i) {
    SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    BenchmarkSequence seq;
    seq.spec = standard_rig();
    seq.spec.num_frames = num_frames;
    seq.spec.frame_rate = 10.0;
    seq.spec.seed = mix_seed(seed, 1000 + static_cast<std::uint64_t>(i));

    // Stratified target range so both sides of 30 m are populated.
    const double range = 10.0 + 50.0 * (i + rng.uniform()) / num_sequences;
    const double az = rng.uniform(-0.3, 0.3);
    SceneObject target;
    target.cls = ObjectClass::car;
    target.box.size = {rng.uniform(1.7, 2.1), rng.uniform(4.0, 5.0), rng.uniform(1.45, 1.8)};
    target.box.center = {range * std::cos(az), range * std::sin(az), ground + 0.5 * target.box.size.z()};
    const double speed = rng.uniform(2.0, 8.0);
    for (int attempt = 0; attempt < 50; ++attempt) {
      target.box.yaw = wrap_angle(rng.uniform(-std::numbers::pi, std::numbers::pi));
      target.velocity = {speed * std::cos(target.box.yaw), speed * std::sin(target.box.yaw), 0.0};
      if (in_view(target.box.center + target.velocity * dt_total)) break;
    }
    seq.spec.objects.push_back(target);
    seq.target = 0;

    auto clear_of = [&](const SceneObject& cand) {
      for (const auto& o : seq.spec.objects)
        for (double t : {0.0, 0.5 * dt_total, dt_total}) {
          const Eigen::Vector3d a = cand.box.center + cand.velocity * t, b = o.box.center + o.velocity * t;
          if ((a - b).head<2>().norm() < 5.5) return false;
        }
      const Eigen::Vector3d end = cand.box.center + cand.velocity * dt_total;
      return in_view(cand.box.center) && in_view(end);
    };

    // One parked car and one walking pedestrian near the target.
    for (ObjectClass cls : {ObjectClass::car, ObjectClass::pedestrian}) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        SceneObject d;
        d.cls = cls;
        const double ang = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const double off = rng.uniform(6.0, 12.0);
        if (cls == ObjectClass::car) {
          d.box.size = {rng.uniform(1.7, 2.1), rng.uniform(4.0, 5.0), rng.uniform(1.45, 1.8)};
        } else {
          d.box.size = {rng.uniform(0.5, 0.8), rng.uniform(0.5, 0.8), rng.uniform(1.6, 1.9)};
          const double heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
          d.velocity = {1.2 * std::cos(heading), 1.2 * std::sin(heading), 0.0};
        }
        d.box.center = {target.box.center.x() + off * std::cos(ang), target.box.center.y() + off * std::sin(ang),
                        ground + 0.5 * d.box.size.z()};
        d.box.yaw = wrap_angle(rng.uniform(-std::numbers::pi, std::numbers::pi));
        if (clear_of(d)) {
          seq.spec.objects.push_back(d);
          break;
        }
      }
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace mvcp
