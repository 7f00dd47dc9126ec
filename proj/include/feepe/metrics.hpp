#pragma once

#include <span>
#include <vector>

#include "feepe/geometry.hpp"

namespace feepe {

struct EmptyErrors : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mean per-point distance between the two transforms of the model.
double add_error(const Pose& est, const Pose& gt,
                 std::span<const Eigen::Vector3d> model);

/// Symmetric variant: mean closest-point distance.
double adds_error(const Pose& est, const Pose& gt,
                  std::span<const Eigen::Vector3d> model);

struct AccuracyCurve {
  std::vector<double> thresholds;  // meters, ascending
  std::vector<double> accuracy;    // fraction per threshold
  double auc = 0.0;                // percentage
};

/// accuracy(tau) = fraction of errors <= tau at `steps` uniform thresholds in
/// (0, max_threshold]; auc = 100 * mean accuracy.
AccuracyCurve auc(std::span<const double> errors, double max_threshold,
                  int steps = 1000);

}  // namespace feepe
