#pragma once

#include <Eigen/Core>

namespace feepe {

/// A target-image pixel paired with a model-frame 3D point.
struct Match2D3D {
  Eigen::Vector2d u;  // pixels
  Eigen::Vector3d X;  // meters, model frame
  double similarity = 0.0;
};

}  // namespace feepe
