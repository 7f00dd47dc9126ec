#include "feepe/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace feepe {

Rotation Rotation::from_axis_angle(const Eigen::Vector3d& axis, double angle_rad) {
  const double n = axis.norm();
  if (n < 1e-15) return Rotation::identity();
  return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis / n)));
}

double Rotation::angle() const {
  // q is canonicalized (w >= 0), so the angle is in [0, pi].
  const double w = std::clamp(q_.w(), -1.0, 1.0);
  return 2.0 * std::acos(w);
}

Eigen::Vector3d Rotation::axis() const {
  const Eigen::Vector3d v = q_.vec();
  const double n = v.norm();
  if (n < 1e-15) return Eigen::Vector3d::UnitZ();
  return v / n;
}

bool Rotation::approx_equal(const Rotation& other, double tol) const {
  return angular_distance(*this, other) < tol;
}

double angular_distance(const Rotation& a, const Rotation& b) {
  // trace(Ra^T Rb) via the relative quaternion: tr = 4*w^2 - 1.
  const Eigen::Quaterniond rel = a.quaternion().conjugate() * b.quaternion();
  const double tr = 4.0 * rel.w() * rel.w() - 1.0;
  const double c = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

double angular_distance(const Pose& a, const Pose& b) {
  return angular_distance(a.rotation, b.rotation);
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw GeometryError("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw GeometryError("intrinsics: image size must be positive");
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
    throw GeometryError("intrinsics: principal point outside image");
}

Eigen::Vector2d project(const CameraIntrinsics& k, const Eigen::Vector3d& x_cam) {
  if (x_cam.z() <= 1e-9)
    throw NonPositiveDepth("project: point depth <= 1e-9");
  return {k.fx * x_cam.x() / x_cam.z() + k.cx,
          k.fy * x_cam.y() / x_cam.z() + k.cy};
}

Eigen::Vector3d back_project(const CameraIntrinsics& k, const Eigen::Vector2d& u,
                             double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth))
    throw InvalidDepth("back_project: depth must be positive and finite");
  return {(u.x() - k.cx) * depth / k.fx, (u.y() - k.cy) * depth / k.fy, depth};
}

}  // namespace feepe
