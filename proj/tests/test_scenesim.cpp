#include <random>

#include "doctest.h"
#include "mvcp/scenesim.hpp"

using namespace mvcp;

namespace {

// Fine, narrow LiDAR so that small boxes collect enough returns to count.
SceneSpec fine_scene() {
  SceneSpec s = standard_rig();
  s.ground_z.reset();
  s.lidar.beams = 128;
  s.lidar.elevation_min_deg = -10;
  s.lidar.elevation_max_deg = 10;
  s.lidar.azimuth_resolution_deg = 0.1;
  s.lidar.max_range = 100;
  return s;
}

std::size_t returns_from_box_at(double x) {
  SceneSpec s = fine_scene();
  s.objects.push_back({Box3D{{x, 0, 0}, {2, 2, 2}, 0}, Eigen::Vector3d::Zero(), ObjectClass::car});
  return simulate_lidar(s, 0).size();
}

// Largest normalised box-local coordinate: 1 on the surface, < 1 inside.
double surface_measure(const Box3D& b, const Eigen::Vector3d& p) {
  const Eigen::Vector3d q = b.to_local(p);
  return std::max({std::abs(q.x()) / (0.5 * b.length()), std::abs(q.y()) / (0.5 * b.width()),
                   std::abs(q.z()) / (0.5 * b.height())});
}

}  // namespace

TEST_CASE("empty scene without ground returns nothing") {
  SceneSpec s = standard_rig();
  s.ground_z.reset();
  CHECK(simulate_lidar(s, 0).empty());
  const RenderedFrame r = render_masks(s, 0);
  CHECK(r.masks.empty());
  for (double d : r.depth.depth) CHECK(d == 0.0);
}

TEST_CASE("returns from a box on the sensor axis lie on its surface") {
  SceneSpec s = fine_scene();
  const Box3D box{{15, 0, 0}, {2, 4, 2}, 0.4};
  s.objects.push_back({box, {}, ObjectClass::car});
  const PointCloud c = simulate_lidar(s, 0);
  REQUIRE(c.size() > 100);
  for (const auto& p : c.points) CHECK(std::abs(surface_measure(box, p) - 1.0) <= 1e-9);
}

TEST_CASE("return count falls with the square of range") {
  const double near = static_cast<double>(returns_from_box_at(10));
  const double far = static_cast<double>(returns_from_box_at(50));
  REQUIRE(far > 0);
  // Visible face sits 1 m in front of the centre.
  const double expected = (49.0 * 49.0) / (9.0 * 9.0);
  CHECK(near / far == doctest::Approx(expected).epsilon(0.2));
}

TEST_CASE("return count is non-increasing with range") {
  std::size_t prev = returns_from_box_at(5);
  for (double x = 7.5; x <= 90; x += 2.5) {
    const std::size_t n = returns_from_box_at(x);
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("ground returns stay on the ground plane and inside max range") {
  SceneSpec s = standard_rig();
  s.objects.push_back({Box3D{{12, 3, -1.0}, {1.9, 4.5, 1.6}, 0.3}, Eigen::Vector3d::Zero(), ObjectClass::car});
  const PointCloud c = simulate_lidar(s, 0);
  REQUIRE(!c.empty());
  for (const auto& p : c.points) {
    CHECK(p.norm() <= s.lidar.max_range + 1e-9);
    const bool on_ground = std::abs(p.z() - *s.ground_z) <= 1e-9;
    const bool on_box = std::abs(surface_measure(s.objects[0].box, p) - 1.0) <= 1e-9;
    CHECK((on_ground || on_box));
  }
}

TEST_CASE("parallel simulate_lidar matches the serial reference") {
  SceneSpec s = standard_rig();
  s.lidar.dropout = 0.3;
  s.seed = 9;
  s.objects.push_back({Box3D{{20, -2, -1.0}, {1.9, 4.5, 1.6}, 0.1}, Eigen::Vector3d::Zero(), ObjectClass::car});
  const PointCloud a = simulate_lidar(s, 0), b = serial::simulate_lidar(s, 0);
  CHECK(a.points == b.points);
}

TEST_CASE("dropout removes about the requested fraction") {
  SceneSpec s = standard_rig();
  const double full = static_cast<double>(simulate_lidar(s, 0).size());
  s.lidar.dropout = 0.25;
  const double kept = static_cast<double>(simulate_lidar(s, 0).size());
  CHECK(kept / full == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("render_masks") {
  SceneSpec s = standard_rig();
  s.objects.push_back({Box3D{{-10, 0, -1.0}, {1.9, 4.5, 1.6}, 0}, Eigen::Vector3d::Zero(), ObjectClass::car});  // behind
  s.objects.push_back({Box3D{{15, 0, -0.9}, {2, 2, 1.8}, 0}, Eigen::Vector3d::Zero(), ObjectClass::car});       // front
  s.objects.push_back({Box3D{{30, 0, -0.9}, {1, 1, 1.0}, 0}, Eigen::Vector3d::Zero(), ObjectClass::car});       // hidden
  const RenderedFrame r = render_masks(s, 0);
  REQUIRE(r.masks.size() == 1);
  CHECK(r.masks[0].instance_id == 2);

  const RigidTransform cam_to_lidar = s.chain().cam_to_lidar();
  for (const auto& m : r.masks) {
    CHECK(m.is_valid(s.camera.width, s.camera.height));
    const Box3D& box = s.objects[static_cast<std::size_t>(m.instance_id - 1)].box;
    for (const auto& p : m.pixels()) {
      const double d = r.depth.at(p.u, p.v);
      REQUIRE(d > 0);
      const Eigen::Vector3d x = cam_to_lidar * back_project(s.camera, p.u + 0.5, p.v + 0.5, d);
      CHECK(std::abs(surface_measure(box, x) - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("partial occlusion keeps the front instance in the overlap") {
  SceneSpec s = standard_rig();
  s.objects.push_back({Box3D{{15, 1.5, -0.9}, {2, 2, 1.8}, 0}, Eigen::Vector3d::Zero(), ObjectClass::car});
  s.objects.push_back({Box3D{{25, 0, -0.9}, {2, 6, 1.8}, 0.2}, Eigen::Vector3d::Zero(), ObjectClass::car});
  const RenderedFrame r = render_masks(s, 0);
  REQUIRE(r.masks.size() == 2);
  const RigidTransform cam_to_lidar = s.chain().cam_to_lidar();
  for (const auto& p : r.masks[1].pixels()) {
    CHECK_FALSE(r.masks[0].contains(p.u, p.v));
    const Eigen::Vector3d x = cam_to_lidar * back_project(s.camera, p.u + 0.5, p.v + 0.5, r.depth.at(p.u, p.v));
    CHECK(std::abs(surface_measure(s.objects[1].box, x) - 1.0) <= 1e-6);
  }
}

TEST_CASE("make_sequence kinematics and determinism") {
  SceneSpec s = standard_rig();
  s.ground_z.reset();
  s.frame_rate = 2;
  s.num_frames = 5;
  s.objects.push_back({Box3D{{0, 5, 0}, {1, 1, 1}, 0}, {1, 0, 0}, ObjectClass::pedestrian});
  s.objects.push_back({Box3D{{20, -3, 0}, {2, 4, 1.5}, 0.5}, Eigen::Vector3d::Zero(), ObjectClass::car});
  const auto a = make_sequence(s), b = make_sequence(s);
  REQUIRE(a.size() == 5);
  CHECK(a[4].gt_boxes[0].center.x() == doctest::Approx(2.0));
  for (std::size_t f = 0; f < a.size(); ++f) {
    CHECK(a[f].gt_boxes[1].center == a[0].gt_boxes[1].center);
    CHECK(a[f].cloud.points == b[f].cloud.points);
    CHECK(a[f].depth.depth == b[f].depth.depth);
    REQUIRE(a[f].masks.size() == b[f].masks.size());
    for (std::size_t k = 0; k < a[f].masks.size(); ++k) CHECK(a[f].masks[k].bitmap == b[f].masks[k].bitmap);
  }
}

TEST_CASE("scene validation") {
  SceneSpec s = standard_rig();
  s.objects.push_back({Box3D{{10, 0, -2.5}, {1, 1, 1}, 0}, Eigen::Vector3d::Zero(), ObjectClass::car});
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = standard_rig();
  s.lidar.max_range = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = standard_rig();
  CHECK_THROWS(simulate_lidar(s, 3));
}

TEST_CASE("sparse benchmark covers both range buckets") {
  const auto bench = sparse_benchmark(20, 20, 0);
  REQUIRE(bench.size() == 20);
  int near = 0, far = 0;
  for (const auto& b : bench) {
    const Box3D& t = b.spec.objects[b.target].box;
    const double r = t.center.head<2>().norm();
    CHECK(r >= 10);
    CHECK(r <= 60);
    (t.center.norm() < 30 ? near : far) += 1;
    CHECK_NOTHROW(b.spec.validate());
  }
  CHECK(near >= 5);
  CHECK(far >= 5);
}
