#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>
#include <string>

namespace feepe {

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonPositiveDepth : GeometryError {
  using GeometryError::GeometryError;
};
struct InvalidDepth : GeometryError {
  using GeometryError::GeometryError;
};

/// Rotation stored as a unit quaternion, canonicalized to w >= 0 so that
/// serialization is deterministic.
class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q) { canonicalize(); }
  Rotation(double w, double x, double y, double z) : q_(w, x, y, z) { canonicalize(); }

  static Rotation identity() { return Rotation(); }
  static Rotation from_axis_angle(const Eigen::Vector3d& axis, double angle_rad);
  static Rotation from_matrix(const Eigen::Matrix3d& m) {
    return Rotation(Eigen::Quaterniond(m));
  }

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Eigen::Matrix3d matrix() const { return q_.toRotationMatrix(); }

  Rotation inverse() const { return Rotation(q_.conjugate()); }
  Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_); }
  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return q_ * v; }

  /// Rotation angle in [0, pi].
  double angle() const;
  Eigen::Vector3d axis() const;

  bool approx_equal(const Rotation& other, double tol = 1e-9) const;

 private:
  void canonicalize() {
    q_.normalize();
    if (q_.w() < 0.0) q_.coeffs() = -q_.coeffs();
  }
  Eigen::Quaterniond q_;
};

/// Rigid transform in SE(3): x_out = R * x + t, translation in meters.
struct Pose {
  Rotation rotation;
  Eigen::Vector3d translation{0.0, 0.0, 0.0};

  Pose() = default;
  Pose(const Rotation& r, const Eigen::Vector3d& t) : rotation(r), translation(t) {}

  static Pose identity() { return Pose(); }

  Pose operator*(const Pose& other) const {
    return Pose(rotation * other.rotation,
                rotation * other.translation + translation);
  }
  Pose inverse() const {
    Rotation rinv = rotation.inverse();
    return Pose(rinv, -(rinv * translation));
  }
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose inverse(const Pose& p) { return p.inverse(); }
inline Eigen::Vector3d transform_point(const Pose& p, const Eigen::Vector3d& x) {
  return p * x;
}

/// Angular distance between the rotation parts of two poses:
/// arccos((tr(Ra^T Rb) - 1) / 2), clamped to [-1, 1] before arccos.
/// Translation never enters; result in [0, pi].
double angular_distance(const Pose& a, const Pose& b);
double angular_distance(const Rotation& a, const Rotation& b);

struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  void validate() const;
  CameraIntrinsics scaled(double s) const {
    return {fx * s, fy * s, cx * s, cy * s,
            static_cast<int>(width * s), static_cast<int>(height * s)};
  }
};

/// Pinhole projection of a camera-frame point; throws NonPositiveDepth
/// when z <= 1e-9.
Eigen::Vector2d project(const CameraIntrinsics& k, const Eigen::Vector3d& x_cam);

/// Back-projection of pixel u at the given depth (meters); throws
/// InvalidDepth for depth <= 0 or non-finite.
Eigen::Vector3d back_project(const CameraIntrinsics& k, const Eigen::Vector2d& u,
                             double depth);

}  // namespace feepe
