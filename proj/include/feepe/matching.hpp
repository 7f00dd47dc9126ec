#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "feepe/features.hpp"
#include "feepe/geometry.hpp"
#include "feepe/matching_types.hpp"
#include "feepe/template_store.hpp"
#include "feepe/view_sampling.hpp"

namespace feepe {

struct TooFewMatchesPnp : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoConsensus : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoCandidate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A 2D-2D correspondence between target and reference cell centers.
struct MatchPair {
  Eigen::Vector2d u_tar;
  Eigen::Vector2d u_ref;
  double sim = 0.0;
};

/// Mutual-nearest-neighbor pairs over masked cells with cosine
/// similarity >= min_sim.
std::vector<MatchPair> match_dense(const FeatureMap& f_tar, const Mask& mask_tar,
                                   const FeatureMap& f_ref, const Mask& mask_ref,
                                   double min_sim);

/// 2D-2D -> 2D-3D via the reference depth map; pairs hitting invalid depth
/// are dropped (count reported through dropped if non-null).
std::vector<Match2D3D> lift_matches(std::span<const MatchPair> pairs,
                                    const DepthMap& ref_depth,
                                    const Pose& ref_viewpoint,
                                    const CameraIntrinsics& k_ref,
                                    int* dropped = nullptr);

struct PoseCandidate {
  Pose pose;
  std::vector<Match2D3D> inliers;
  double reproj_rmse = 0.0;
  int reference_index = -1;
};

struct RansacParams {
  double inlier_px = 3.0;
  int max_iters = 500;
  double confidence = 0.999;
};

PoseCandidate solve_pnp_ransac(std::span<const Match2D3D> matches,
                               const CameraIntrinsics& k,
                               const RansacParams& params, std::uint64_t seed);

struct FrameEstimate {
  std::vector<PoseCandidate> candidates;
  int best_index = -1;
  Pose working_pose;
  /// Template indices of the retrieved references, aligned with nothing in
  /// particular; candidates carry their own reference_index.
  std::vector<int> reference_templates;
};

struct EstimateParams {
  int k_r = 5;
  double min_sim = 0.5;
  RansacParams ransac;
  std::uint64_t seed = 0;
};

/// Retrieval + dense matching + lifting + PnP per reference view; the
/// candidate with most inliers (ties: lowest rmse, then lowest reference
/// index) becomes the working pose. Throws NoCandidate when every reference
/// fails.
FrameEstimate estimate_frame(const FeatureMap& f_tar, const Mask& mask_tar,
                             const TemplateStore& store,
                             const CameraIntrinsics& k_target,
                             const EstimateParams& params);

}  // namespace feepe
