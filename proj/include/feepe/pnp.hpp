#pragma once

#include <optional>
#include <span>

#include "feepe/geometry.hpp"

namespace feepe {

/// EPnP (Lepetit et al.): non-iterative PnP from n >= 4 correspondences.
/// Returns the model->camera pose, or nullopt on a degenerate configuration.
std::optional<Pose> epnp_solve(std::span<const Eigen::Vector2d> image_points,
                               std::span<const Eigen::Vector3d> model_points,
                               const CameraIntrinsics& k);

/// DLT projection-matrix estimate with rotation orthonormalization,
/// n >= 6 correspondences. Fallback solver for EPnP-degenerate sets.
std::optional<Pose> dlt_solve(std::span<const Eigen::Vector2d> image_points,
                              std::span<const Eigen::Vector3d> model_points,
                              const CameraIntrinsics& k);

/// Singular-value conditioning of a point set's spread; sample sets with
/// ratio > 1e6 (planar or collinear within noise) are rejected by RANSAC.
double point_set_condition(std::span<const Eigen::Vector3d> points);

}  // namespace feepe
