#include "feepe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "feepe/view_sampling.hpp"

namespace feepe {

double add_error(const Pose& est, const Pose& gt,
                 std::span<const Eigen::Vector3d> model) {
  if (model.empty()) throw EmptyModel("add_error: empty model");
  double sum = 0.0;
  for (const auto& x : model) sum += (est * x - gt * x).norm();
  return sum / static_cast<double>(model.size());
}

double adds_error(const Pose& est, const Pose& gt,
                  std::span<const Eigen::Vector3d> model) {
  if (model.empty()) throw EmptyModel("adds_error: empty model");
  std::vector<Eigen::Vector3d> gt_pts;
  gt_pts.reserve(model.size());
  for (const auto& x : model) gt_pts.push_back(gt * x);
  double sum = 0.0;
  for (const auto& x : model) {
    const Eigen::Vector3d p = est * x;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : gt_pts) best = std::min(best, (p - q).squaredNorm());
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(model.size());
}

AccuracyCurve auc(std::span<const double> errors, double max_threshold,
                  int steps) {
  if (errors.empty()) throw EmptyErrors("auc: no errors");
  if (steps < 2 || !(max_threshold > 0.0))
    throw std::invalid_argument("auc: steps >= 2 and max_threshold > 0 required");

  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());

  AccuracyCurve curve;
  curve.thresholds.reserve(steps);
  curve.accuracy.reserve(steps);
  double acc_sum = 0.0;
  for (int i = 1; i <= steps; ++i) {
    const double tau = max_threshold * i / steps;
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), tau);
    const double frac = static_cast<double>(it - sorted.begin()) / sorted.size();
    curve.thresholds.push_back(tau);
    curve.accuracy.push_back(frac);
    acc_sum += frac;
  }
  curve.auc = 100.0 * acc_sum / steps;
  return curve;
}

}  // namespace feepe
