#include "mvcp/box.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace mvcp {

std::string_view to_string(ObjectClass c) {
  return c == ObjectClass::car ? "car" : "pedestrian";
}

ObjectClass parse_object_class(std::string_view s) {
  if (s == "car") return ObjectClass::car;
  if (s == "pedestrian") return ObjectClass::pedestrian;
  throw std::invalid_argument("unknown object class '" + std::string(s) + "'");
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

bool Box3D::is_valid() const {
  return center.allFinite() && size.allFinite() && (size.array() > 0.0).all() && std::isfinite(yaw) &&
         yaw > -std::numbers::pi && yaw <= std::numbers::pi;
}

Eigen::Vector3d Box3D::to_local(const Eigen::Vector3d& p) const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const Eigen::Vector3d d = p - center;
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
}

bool Box3D::contains(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d q = to_local(p);
  return std::abs(q.x()) <= 0.5 * length() && std::abs(q.y()) <= 0.5 * width() &&
         std::abs(q.z()) <= 0.5 * height();
}

std::array<Eigen::Vector2d, 4> Box3D::footprint() const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double hl = 0.5 * length(), hw = 0.5 * width();
  const std::array<Eigen::Vector2d, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  std::array<Eigen::Vector2d, 4> out;
  for (std::size_t i = 0; i < 4; ++i)
    out[i] = {center.x() + c * local[i].x() - s * local[i].y(), center.y() + s * local[i].x() + c * local[i].y()};
  return out;
}

std::array<Eigen::Vector3d, 8> Box3D::corners() const {
  const auto fp = footprint();
  std::array<Eigen::Vector3d, 8> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {fp[i].x(), fp[i].y(), center.z() - 0.5 * height()};
    out[i + 4] = {fp[i].x(), fp[i].y(), center.z() + 0.5 * height()};
  }
  return out;
}

namespace {

using Polygon = std::vector<Eigen::Vector2d>;

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Sutherland-Hodgman against a convex CCW clip polygon.
Polygon clip(Polygon subject, const std::array<Eigen::Vector2d, 4>& clipper) {
  for (std::size_t e = 0; e < clipper.size() && !subject.empty(); ++e) {
    const Eigen::Vector2d& a = clipper[e];
    const Eigen::Vector2d edge = clipper[(e + 1) % clipper.size()] - a;
    Polygon next;
    next.reserve(subject.size() + 2);
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Eigen::Vector2d& p = subject[i];
      const Eigen::Vector2d& q = subject[(i + 1) % subject.size()];
      const double sp = cross(edge, p - a), sq = cross(edge, q - a);
      if (sp >= 0) next.push_back(p);
      if ((sp >= 0) != (sq >= 0)) next.push_back(p + (q - p) * (sp / (sp - sq)));
    }
    subject = std::move(next);
  }
  return subject;
}

double area(const Polygon& poly) {
  double a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * std::abs(a);
}

auto key(const Box3D& b) {
  return std::make_tuple(b.center.x(), b.center.y(), b.center.z(), b.size.x(), b.size.y(), b.size.z(), b.yaw);
}

}  // namespace

double footprint_overlap(const Box3D& a, const Box3D& b) {
  const auto fa = a.footprint();
  return area(clip(Polygon(fa.begin(), fa.end()), b.footprint()));
}

double iou3d(const Box3D& a_in, const Box3D& b_in) {
  // Fixed argument order makes the result independent of call order.
  const bool swap = key(b_in) < key(a_in);
  const Box3D& a = swap ? b_in : a_in;
  const Box3D& b = swap ? a_in : b_in;
  if (key(a) == key(b)) return 1.0;

  const double z_lo = std::max(a.center.z() - 0.5 * a.height(), b.center.z() - 0.5 * b.height());
  const double z_hi = std::min(a.center.z() + 0.5 * a.height(), b.center.z() + 0.5 * b.height());
  if (!(z_hi > z_lo)) return 0.0;
  const double inter = footprint_overlap(a, b) * (z_hi - z_lo);
  if (!(inter > 0)) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace mvcp
