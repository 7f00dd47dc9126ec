#pragma once

#include <span>
#include <vector>

#include "feepe/geometry.hpp"
#include "feepe/matching_types.hpp"

namespace feepe {

struct TooFewMatches : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One keyframe's contribution to the joint refinement: its relative FK pose
/// to the current frame and its 2D-3D inlier matches. target_depths holds the
/// keyframe's measured depth at each match pixel; <= 0 or non-finite = absent
/// (the match then only enters the 2D term).
struct Observation {
  Pose delta_pose;
  std::vector<Match2D3D> matches;
  std::vector<double> target_depths;
};

struct RobustLossParams {
  double cauchy_c_2d = 2.0;  // pixels
  double cauchy_c_3d = 0.01; // meters
  double lambda = 1.0;
};

struct OptimizeOptions {
  int max_iterations = 100;
  double cost_tol = 1e-8;
  double step_tol = 1e-10;
};

struct OptimizeResult {
  Pose pose;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Cauchy robust loss (c^2/2) * ln(1 + r^2/c^2).
double cauchy(double r, double c);

double loss_2d(const Pose& p_t, std::span<const Observation> obs,
               const CameraIntrinsics& k, const RobustLossParams& params);
double loss_3d(const Pose& p_t, std::span<const Observation> obs,
               const CameraIntrinsics& k, const RobustLossParams& params);
double loss_total(const Pose& p_t, std::span<const Observation> obs,
                  const CameraIntrinsics& k, const RobustLossParams& params);

/// Raw (un-robustified) residuals and their Jacobians w.r.t. the 6-dim local
/// increment [omega; nu] applied as R <- exp(omega^) R, t <- t + nu.
/// Returns false when the transformed point is behind the camera (2D case).
bool reprojection_residual(const Pose& p_t, const Pose& delta,
                           const Eigen::Vector3d& x, const Eigen::Vector2d& u,
                           const CameraIntrinsics& k, Eigen::Vector2d* residual,
                           Eigen::Matrix<double, 2, 6>* jacobian);
void point_distance_residual(const Pose& p_t, const Pose& delta,
                             const Eigen::Vector3d& x, const Eigen::Vector2d& u,
                             double depth, const CameraIntrinsics& k,
                             Eigen::Vector3d* residual,
                             Eigen::Matrix<double, 3, 6>* jacobian);

/// Levenberg-Marquardt with iteratively reweighted Cauchy robustification
/// over the combined 2D + lambda * 3D loss.
OptimizeResult refine_pose(const Pose& init, std::span<const Observation> obs,
                           const CameraIntrinsics& k,
                           const RobustLossParams& params,
                           const OptimizeOptions& opts = {});

}  // namespace feepe
