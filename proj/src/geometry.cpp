#include "mvcp/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace mvcp {

namespace {

constexpr double kDriftTolerance = 1e-12;

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0) u.col(2) *= -1.0;
  return u * v.transpose();
}

}  // namespace

RigidTransform RigidTransform::from_translation(const Eigen::Vector3d& t) {
  RigidTransform out;
  out.translation = t;
  return out;
}

RigidTransform RigidTransform::rot_z(double angle) {
  RigidTransform out;
  out.rotation = Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return out;
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  if (!m.allFinite()) throw std::invalid_argument("transform has non-finite entries");
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0)
    throw std::invalid_argument("last row of transform must be (0, 0, 0, 1)");
  RigidTransform out;
  out.rotation = m.topLeftCorner<3, 3>();
  out.translation = m.topRightCorner<3, 1>();
  if (!out.is_valid()) throw std::invalid_argument("rotation block is not orthonormal with det +1");
  return out;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

double RigidTransform::orthonormality_error() const {
  return (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

bool RigidTransform::is_valid(double tol) const {
  return rotation.allFinite() && translation.allFinite() && orthonormality_error() < tol &&
         std::abs(rotation.determinant() - 1.0) < tol;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  if (out.orthonormality_error() > kDriftTolerance) out.rotation = nearest_rotation(out.rotation);
  return out;
}

RigidTransform invert(const RigidTransform& t) {
  RigidTransform out;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.rotation * t.translation);
  return out;
}

bool CameraIntrinsics::is_valid() const {
  return std::isfinite(fx) && std::isfinite(fy) && fx > 0 && fy > 0 && width > 0 && height > 0 &&
         cx >= 0 && cy >= 0 && cx < width && cy < height;
}

RigidTransform TransformChain::lidar_to_cam() const {
  return compose(car_to_cam, compose(ego_motion, lidar_to_car));
}

bool PointCloud::all_finite() const {
  for (const auto& p : points)
    if (!p.allFinite()) return false;
  return true;
}

PointCloud apply(const RigidTransform& t, const PointCloud& cloud) {
  PointCloud out;
  out.intensity = cloud.intensity;
  out.points.resize(cloud.points.size());
  const auto n = static_cast<std::ptrdiff_t>(cloud.points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out.points[i] = t * cloud.points[i];
  return out;
}

std::optional<PixelDepth> project_point(const CameraIntrinsics& intr, const Eigen::Vector3d& p_cam,
                                        std::size_t source_index) {
  const double d = p_cam.z();
  if (!(d > 0.0)) return std::nullopt;
  const double u = intr.fx * p_cam.x() / d + intr.cx;
  const double v = intr.fy * p_cam.y() / d + intr.cy;
  if (!intr.contains(u, v)) return std::nullopt;
  return PixelDepth{u, v, d, source_index};
}

std::vector<PixelDepth> project(const CameraIntrinsics& intr, const TransformChain& chain,
                                const PointCloud& cloud) {
  const RigidTransform to_cam = chain.lidar_to_cam();
  const auto n = static_cast<std::ptrdiff_t>(cloud.points.size());
  std::vector<PixelDepth> staged(cloud.points.size());
  std::vector<unsigned char> keep(cloud.points.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (auto px = project_point(intr, to_cam * cloud.points[i], static_cast<std::size_t>(i))) {
      staged[i] = *px;
      keep[i] = 1;
    }
  }
  std::vector<PixelDepth> out;
  out.reserve(cloud.points.size());
  for (std::ptrdiff_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(staged[i]);
  return out;
}

Eigen::Vector3d back_project(const CameraIntrinsics& intr, double u, double v, double d) {
  if (!(d > 0.0)) throw std::invalid_argument("back_project: depth must be positive");
  return {d * (u - intr.cx) / intr.fx, d * (v - intr.cy) / intr.fy, d};
}

namespace serial {

std::vector<PixelDepth> project(const CameraIntrinsics& intr, const TransformChain& chain,
                                const PointCloud& cloud) {
  const RigidTransform to_cam = chain.lidar_to_cam();
  std::vector<PixelDepth> out;
  for (std::size_t i = 0; i < cloud.points.size(); ++i)
    if (auto px = project_point(intr, to_cam * cloud.points[i], i)) out.push_back(*px);
  return out;
}

}  // namespace serial

}  // namespace mvcp
