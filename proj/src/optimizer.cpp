#include "feepe/optimizer.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace feepe {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Pose apply_increment(const Pose& p, const Eigen::Matrix<double, 6, 1>& dx) {
  const Eigen::Vector3d omega = dx.head<3>();
  const Rotation dr = Rotation::from_axis_angle(omega, omega.norm());
  return Pose(dr * p.rotation, p.translation + dx.tail<3>());
}

constexpr double kMinDepth = 1e-6;

}  // namespace

double cauchy(double r, double c) {
  const double q = r / c;
  return 0.5 * c * c * std::log1p(q * q);
}

bool reprojection_residual(const Pose& p_t, const Pose& delta,
                           const Eigen::Vector3d& x, const Eigen::Vector2d& u,
                           const CameraIntrinsics& k, Eigen::Vector2d* residual,
                           Eigen::Matrix<double, 2, 6>* jacobian) {
  const Eigen::Vector3d z = delta * x;        // keyframe model point, EE frame of t
  const Eigen::Vector3d y = p_t * z;          // camera frame
  if (y.z() <= kMinDepth) return false;
  const double inv_z = 1.0 / y.z();
  if (residual) {
    (*residual) << k.fx * y.x() * inv_z + k.cx - u.x(),
        k.fy * y.y() * inv_z + k.cy - u.y();
  }
  if (jacobian) {
    Eigen::Matrix<double, 2, 3> jproj;
    jproj << k.fx * inv_z, 0.0, -k.fx * y.x() * inv_z * inv_z, 0.0,
        k.fy * inv_z, -k.fy * y.y() * inv_z * inv_z;
    Eigen::Matrix<double, 3, 6> jpoint;
    jpoint.leftCols<3>() = -skew(y - p_t.translation);
    jpoint.rightCols<3>() = Eigen::Matrix3d::Identity();
    *jacobian = jproj * jpoint;
  }
  return true;
}

void point_distance_residual(const Pose& p_t, const Pose& delta,
                             const Eigen::Vector3d& x, const Eigen::Vector2d& u,
                             double depth, const CameraIntrinsics& k,
                             Eigen::Vector3d* residual,
                             Eigen::Matrix<double, 3, 6>* jacobian) {
  const Eigen::Vector3d z = delta * x;
  const Eigen::Vector3d y = p_t * z;
  if (residual) {
    const Eigen::Vector3d lifted((u.x() - k.cx) * depth / k.fx,
                                 (u.y() - k.cy) * depth / k.fy, depth);
    *residual = lifted - y;
  }
  if (jacobian) {
    jacobian->leftCols<3>() = skew(y - p_t.translation);
    jacobian->rightCols<3>() = -Eigen::Matrix3d::Identity();
  }
}

double loss_2d(const Pose& p_t, std::span<const Observation> obs,
               const CameraIntrinsics& k, const RobustLossParams& params) {
  double total = 0.0;
  for (const auto& o : obs) {
    for (const auto& m : o.matches) {
      Eigen::Vector2d r;
      if (reprojection_residual(p_t, o.delta_pose, m.X, m.u, k, &r, nullptr)) {
        total += cauchy(r.norm(), params.cauchy_c_2d);
      } else {
        // Behind-camera saturation penalty keeps the cost finite.
        total += cauchy(10.0 * params.cauchy_c_2d, params.cauchy_c_2d);
      }
    }
  }
  return total;
}

double loss_3d(const Pose& p_t, std::span<const Observation> obs,
               const CameraIntrinsics& k, const RobustLossParams& params) {
  double total = 0.0;
  for (const auto& o : obs) {
    for (std::size_t j = 0; j < o.matches.size(); ++j) {
      const double d = j < o.target_depths.size() ? o.target_depths[j] : 0.0;
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      Eigen::Vector3d r;
      point_distance_residual(p_t, o.delta_pose, o.matches[j].X, o.matches[j].u,
                              d, k, &r, nullptr);
      total += cauchy(r.norm(), params.cauchy_c_3d);
    }
  }
  return total;
}

double loss_total(const Pose& p_t, std::span<const Observation> obs,
                  const CameraIntrinsics& k, const RobustLossParams& params) {
  return loss_2d(p_t, obs, k, params) +
         params.lambda * loss_3d(p_t, obs, k, params);
}

OptimizeResult refine_pose(const Pose& init, std::span<const Observation> obs,
                           const CameraIntrinsics& k,
                           const RobustLossParams& params,
                           const OptimizeOptions& opts) {
  std::size_t total_matches = 0;
  for (const auto& o : obs) total_matches += o.matches.size();
  if (total_matches < 4)
    throw TooFewMatches("refine_pose: need >= 4 matches across observations");

  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;

  const double c2 = params.cauchy_c_2d;
  const double c3 = params.cauchy_c_3d;

  OptimizeResult result;
  Pose pose = init;
  double cost = loss_total(pose, obs, k, params);
  if (!std::isfinite(cost))
    throw NumericalFailure("refine_pose: non-finite initial cost");
  result.initial_cost = cost;

  double mu = 1e-4;
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    Mat6 a = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    for (const auto& o : obs) {
      for (std::size_t j = 0; j < o.matches.size(); ++j) {
        const auto& m = o.matches[j];
        Eigen::Vector2d r2;
        Eigen::Matrix<double, 2, 6> j2;
        if (reprojection_residual(pose, o.delta_pose, m.X, m.u, k, &r2, &j2)) {
          const double w = 1.0 / (1.0 + r2.squaredNorm() / (c2 * c2));
          a.noalias() += w * j2.transpose() * j2;
          g.noalias() += w * j2.transpose() * r2;
        }
        const double d = j < o.target_depths.size() ? o.target_depths[j] : 0.0;
        if ((d > 0.0) && std::isfinite(d)) {
          Eigen::Vector3d r3;
          Eigen::Matrix<double, 3, 6> j3;
          point_distance_residual(pose, o.delta_pose, m.X, m.u, d, k, &r3, &j3);
          const double w =
              params.lambda / (1.0 + r3.squaredNorm() / (c3 * c3));
          a.noalias() += w * j3.transpose() * j3;
          g.noalias() += w * j3.transpose() * r3;
        }
      }
    }
    if (!a.allFinite() || !g.allFinite())
      throw NumericalFailure("refine_pose: non-finite normal equations");

    bool accepted = false;
    for (int attempt = 0; attempt < 10; ++attempt) {
      const Vec6 dx = (a + mu * Mat6::Identity()).ldlt().solve(-g);
      if (!dx.allFinite()) {
        mu *= 10.0;
        continue;
      }
      const Pose trial = apply_increment(pose, dx);
      const double trial_cost = loss_total(trial, obs, k, params);
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        const double rel_change =
            (cost - trial_cost) / std::max(cost, 1e-300);
        pose = trial;
        cost = trial_cost;
        mu = std::max(mu * 0.3, 1e-12);
        accepted = true;
        if (rel_change < opts.cost_tol || dx.norm() < opts.step_tol)
          result.converged = true;
        break;
      }
      mu *= 10.0;
    }
    if (!accepted) {
      result.converged = true;  // no descent direction left
      ++iter;
      break;
    }
    if (result.converged) {
      ++iter;
      break;
    }
  }

  result.pose = pose;
  result.final_cost = cost;
  result.iterations = iter;
  return result;
}

}  // namespace feepe
