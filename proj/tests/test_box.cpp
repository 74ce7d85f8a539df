#include <numbers>
#include <random>

#include "doctest.h"
#include "mvcp/box.hpp"
#include "oracles.hpp"

using namespace mvcp;

namespace {

constexpr double kPi = std::numbers::pi;

Box3D random_box(std::mt19937_64& g, double spread) {
  std::uniform_real_distribution<double> c(-spread, spread), s(0.3, 4.0), yaw(-kPi, kPi);
  return {{c(g), c(g), c(g) * 0.3}, {s(g), s(g), s(g)}, wrap_angle(yaw(g))};
}

}  // namespace

TEST_CASE("identical boxes") {
  const Box3D b{{1, 2, 3}, {1.8, 4.4, 1.5}, 0.7};
  CHECK(iou3d(b, b) == 1.0);
}

TEST_CASE("disjoint boxes") {
  const Box3D a{{0, 0, 0}, {2, 4, 1.5}, 0.3};
  Box3D b = a;
  b.center.x() += 2 + 4 + 0.01;
  CHECK(iou3d(a, b) == 0.0);
  b = a;
  b.center.z() += 1.6;
  CHECK(iou3d(a, b) == 0.0);
}

TEST_CASE("unit cubes offset by half a side") {
  const Box3D a{{0, 0, 0}, {1, 1, 1}, 0};
  const Box3D b{{0.5, 0, 0}, {1, 1, 1}, 0};
  CHECK(std::abs(iou3d(a, b) - 1.0 / 3.0) <= 1e-6);
  CHECK(std::abs(oracle::iou_raster(a, b) - 1.0 / 3.0) <= 1e-3);
}

TEST_CASE("square rotated by 45 degrees inside its circumscribed square") {
  // Footprint of b is the diamond inscribed in a: overlap is half of a's area.
  const Box3D a{{0, 0, 0}, {2, 2, 1}, 0};
  const Box3D b{{0, 0, 0}, {std::sqrt(2.0), std::sqrt(2.0), 1}, kPi / 4};
  CHECK(footprint_overlap(a, b) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(iou3d(a, b) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("iou3d agrees with the rasterization oracle") {
  std::mt19937_64 g(41);
  int overlapping = 0;
  for (int i = 0; i < 300; ++i) {
    const Box3D a = random_box(g, 1.5), b = random_box(g, 1.5);
    const double got = iou3d(a, b), want = oracle::iou_raster(a, b);
    CHECK(std::abs(got - want) <= 1e-3);
    if (got > 0) ++overlapping;
  }
  CHECK(overlapping > 150);
}

TEST_CASE("iou3d is exactly symmetric and invariant under joint rigid motion") {
  std::mt19937_64 g(42);
  std::uniform_real_distribution<double> t(-50, 50), yaw(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const Box3D a = random_box(g, 1.5), b = random_box(g, 1.5);
    const double v = iou3d(a, b);
    CHECK(v == iou3d(b, a));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);

    const double r = yaw(g);
    const Eigen::Vector3d shift(t(g), t(g), t(g));
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(r, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    auto move = [&](const Box3D& q) { return Box3D{rot * q.center + shift, q.size, wrap_angle(q.yaw + r)}; };
    CHECK(std::abs(iou3d(move(a), move(b)) - v) < 1e-9);
  }
}

TEST_CASE("box helpers") {
  const Box3D b{{1, 1, 0}, {2, 4, 2}, kPi / 2};
  CHECK(b.width() == 2);
  CHECK(b.length() == 4);
  CHECK(b.volume() == 16);
  CHECK(b.contains({1, 2.9, 0.9}));   // heading is +y, half-length 2
  CHECK_FALSE(b.contains({2.1, 1, 0}));  // half-width 1 across
  CHECK(Box3D{{0, 0, 0}, {2, 4, 2}, 0}.contains({2.0, 1.0, 1.0}));  // boundary is inside
  const auto fp = b.footprint();
  double area = 0;
  for (int i = 0; i < 4; ++i) {
    const auto& p = fp[static_cast<std::size_t>(i)];
    const auto& q = fp[static_cast<std::size_t>((i + 1) % 4)];
    area += p.x() * q.y() - q.x() * p.y();
  }
  CHECK(area / 2 == doctest::Approx(8.0));  // positive: counter-clockwise
  CHECK(b.is_valid());
  CHECK_FALSE(Box3D{{0, 0, 0}, {0, 1, 1}, 0}.is_valid());
  CHECK_FALSE(Box3D{{0, 0, 0}, {1, 1, 1}, -kPi}.is_valid());
}

TEST_CASE("wrap_angle and class names") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(parse_object_class("car") == ObjectClass::car);
  CHECK(parse_object_class(to_string(ObjectClass::pedestrian)) == ObjectClass::pedestrian);
  CHECK_THROWS_AS(parse_object_class("truck"), std::invalid_argument);
}
