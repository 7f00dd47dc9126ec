#include "feepe/matching.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "feepe/optimizer.hpp"
#include "feepe/pnp.hpp"

namespace feepe {

namespace {

struct CellList {
  std::vector<std::pair<int, int>> rc;
  Eigen::MatrixXf descriptors;  // n x D, unit rows
};

CellList masked_cells(const FeatureMap& fm, const Mask& mask) {
  CellList out;
  for (int r = 0; r < fm.height; ++r)
    for (int c = 0; c < fm.width; ++c)
      if (mask.cell_foreground(r, c, fm.stride)) out.rc.emplace_back(r, c);
  out.descriptors.resize(static_cast<int>(out.rc.size()), fm.dim);
  for (std::size_t i = 0; i < out.rc.size(); ++i) {
    Eigen::VectorXf v = fm.cell_vec(out.rc[i].first, out.rc[i].second);
    const float n = v.norm();
    if (n > 1e-12f) v /= n;
    out.descriptors.row(static_cast<int>(i)) = v;
  }
  return out;
}

}  // namespace

std::vector<MatchPair> match_dense(const FeatureMap& f_tar, const Mask& mask_tar,
                                   const FeatureMap& f_ref, const Mask& mask_ref,
                                   double min_sim) {
  if (f_tar.dim != f_ref.dim)
    throw DimensionMismatch("match_dense: descriptor dimensions differ");

  const CellList tar = masked_cells(f_tar, mask_tar);
  const CellList ref = masked_cells(f_ref, mask_ref);
  std::vector<MatchPair> out;
  if (tar.rc.empty() || ref.rc.empty()) return out;

  const Eigen::MatrixXf sims = tar.descriptors * ref.descriptors.transpose();

  const int nt = static_cast<int>(tar.rc.size());
  const int nr = static_cast<int>(ref.rc.size());
  std::vector<int> best_ref(nt);
  for (int i = 0; i < nt; ++i) sims.row(i).maxCoeff(&best_ref[i]);
  std::vector<int> best_tar(nr);
  for (int j = 0; j < nr; ++j) sims.col(j).maxCoeff(&best_tar[j]);

  for (int i = 0; i < nt; ++i) {
    const int j = best_ref[i];
    if (best_tar[j] != i) continue;
    const double s = sims(i, j);
    if (s < min_sim) continue;
    MatchPair mp;
    mp.u_tar = f_tar.cell_center_px(tar.rc[i].first, tar.rc[i].second);
    mp.u_ref = f_ref.cell_center_px(ref.rc[j].first, ref.rc[j].second);
    mp.sim = s;
    out.push_back(mp);
  }
  return out;
}

std::vector<Match2D3D> lift_matches(std::span<const MatchPair> pairs,
                                    const DepthMap& ref_depth,
                                    const Pose& ref_viewpoint,
                                    const CameraIntrinsics& k_ref,
                                    int* dropped) {
  const Pose cam_to_model = ref_viewpoint.inverse();
  std::vector<Match2D3D> out;
  int n_dropped = 0;
  for (const auto& p : pairs) {
    const int c = static_cast<int>(std::floor(p.u_ref.x()));
    const int r = static_cast<int>(std::floor(p.u_ref.y()));
    if (r < 0 || r >= ref_depth.height || c < 0 || c >= ref_depth.width ||
        !ref_depth.valid(r, c)) {
      ++n_dropped;
      continue;
    }
    const double d = ref_depth.at(r, c);
    const Eigen::Vector3d x_cam = back_project(k_ref, p.u_ref, d);
    Match2D3D m;
    m.u = p.u_tar;
    m.X = cam_to_model * x_cam;
    m.similarity = p.sim;
    out.push_back(m);
  }
  if (dropped) *dropped = n_dropped;
  return out;
}

namespace {

std::vector<int> inliers_under(const Pose& pose,
                               std::span<const Match2D3D> matches,
                               const CameraIntrinsics& k, double inlier_px) {
  std::vector<int> idx;
  const double thresh2 = inlier_px * inlier_px;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Eigen::Vector3d pc = pose * matches[i].X;
    if (pc.z() <= 1e-9) continue;
    const Eigen::Vector2d u(k.fx * pc.x() / pc.z() + k.cx,
                            k.fy * pc.y() / pc.z() + k.cy);
    if ((u - matches[i].u).squaredNorm() <= thresh2)
      idx.push_back(static_cast<int>(i));
  }
  return idx;
}

double rmse_over(const Pose& pose, std::span<const Match2D3D> matches,
                 std::span<const int> idx, const CameraIntrinsics& k) {
  double sum = 0.0;
  for (int i : idx) {
    const Eigen::Vector3d pc = pose * matches[i].X;
    const Eigen::Vector2d u(k.fx * pc.x() / pc.z() + k.cx,
                            k.fy * pc.y() / pc.z() + k.cy);
    sum += (u - matches[i].u).squaredNorm();
  }
  return idx.empty() ? 0.0 : std::sqrt(sum / idx.size());
}

}  // namespace

PoseCandidate solve_pnp_ransac(std::span<const Match2D3D> matches,
                               const CameraIntrinsics& k,
                               const RansacParams& params, std::uint64_t seed) {
  const int n = static_cast<int>(matches.size());
  if (n < 4) throw TooFewMatchesPnp("solve_pnp_ransac: need >= 4 matches");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  std::vector<int> best_inliers;
  Pose best_pose;
  int iters_needed = params.max_iters;
  for (int it = 0; it < params.max_iters && it < iters_needed; ++it) {
    int idx[4];
    // Distinct 4-point sample.
    for (int j = 0; j < 4; ++j) {
      bool fresh;
      do {
        idx[j] = pick(rng);
        fresh = true;
        for (int m = 0; m < j; ++m)
          if (idx[m] == idx[j]) fresh = false;
      } while (!fresh);
    }
    const std::array<Eigen::Vector2d, 4> us = {matches[idx[0]].u, matches[idx[1]].u,
                                               matches[idx[2]].u, matches[idx[3]].u};
    const std::array<Eigen::Vector3d, 4> xs = {matches[idx[0]].X, matches[idx[1]].X,
                                               matches[idx[2]].X, matches[idx[3]].X};
    if (point_set_condition(xs) > 1e6) continue;
    const auto pose = epnp_solve(us, xs, k);
    if (!pose) continue;
    auto inl = inliers_under(*pose, matches, k, params.inlier_px);
    if (inl.size() > best_inliers.size()) {
      best_inliers = std::move(inl);
      best_pose = *pose;
      // Adaptive early exit.
      const double w = static_cast<double>(best_inliers.size()) / n;
      const double p_all = std::pow(w, 4);
      if (p_all > 1e-12) {
        const double denom = std::log(std::max(1e-12, 1.0 - p_all));
        iters_needed = denom < 0.0
                           ? static_cast<int>(std::ceil(
                                 std::log(1.0 - params.confidence) / denom))
                           : params.max_iters;
      }
    }
  }
  if (best_inliers.size() < 4)
    throw NoConsensus("solve_pnp_ransac: best consensus set < 4");

  // Refit on all inliers by LM on reprojection error (effectively
  // unrobustified: the Cauchy scale is far beyond any inlier residual).
  Observation obs;
  obs.delta_pose = Pose::identity();
  for (int i : best_inliers) obs.matches.push_back(matches[i]);
  RobustLossParams loss;
  loss.cauchy_c_2d = 1e6;
  loss.lambda = 0.0;
  Pose refined = best_pose;
  try {
    refined = refine_pose(best_pose, std::span(&obs, 1), k, loss).pose;
  } catch (const NumericalFailure&) {
    refined = best_pose;
  }

  auto final_inliers = inliers_under(refined, matches, k, params.inlier_px);
  PoseCandidate cand;
  if (final_inliers.size() >= 4) {
    cand.pose = refined;
    cand.reproj_rmse = rmse_over(refined, matches, final_inliers, k);
    for (int i : final_inliers) cand.inliers.push_back(matches[i]);
  } else {
    cand.pose = best_pose;
    cand.reproj_rmse = rmse_over(best_pose, matches, best_inliers, k);
    for (int i : best_inliers) cand.inliers.push_back(matches[i]);
  }
  return cand;
}

FrameEstimate estimate_frame(const FeatureMap& f_tar, const Mask& mask_tar,
                             const TemplateStore& store,
                             const CameraIntrinsics& k_target,
                             const EstimateParams& params) {
  const BoWHistogram hist = bow_histogram(f_tar, mask_tar, store.vocab);
  std::vector<BoWHistogram> hists;
  hists.reserve(store.templates.size());
  for (const auto& t : store.templates) hists.push_back(t.bow);
  const int k_r = std::min<int>(params.k_r, static_cast<int>(hists.size()));
  const auto refs = retrieve_references(hist, hists, k_r);

  FrameEstimate est;
  for (std::size_t ri = 0; ri < refs.size(); ++ri) {
    const int ti = refs[ri].first;
    est.reference_templates.push_back(ti);
    const Template& tpl = store.templates[ti];
    const auto pairs = match_dense(f_tar, mask_tar, tpl.features, tpl.mask,
                                   params.min_sim);
    const auto matches = lift_matches(pairs, tpl.depth, tpl.viewpoint.camera_pose,
                                      store.intrinsics);
    if (matches.size() < 4) continue;
    try {
      PoseCandidate cand = solve_pnp_ransac(
          matches, k_target, params.ransac,
          params.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(ri));
      cand.reference_index = static_cast<int>(ri);
      est.candidates.push_back(std::move(cand));
    } catch (const NoConsensus&) {
      continue;
    }
  }
  if (est.candidates.empty())
    throw NoCandidate("estimate_frame: every reference view failed PnP");

  est.best_index = 0;
  for (std::size_t i = 1; i < est.candidates.size(); ++i) {
    const auto& a = est.candidates[i];
    const auto& b = est.candidates[est.best_index];
    if (a.inliers.size() > b.inliers.size() ||
        (a.inliers.size() == b.inliers.size() &&
         (a.reproj_rmse < b.reproj_rmse ||
          (a.reproj_rmse == b.reproj_rmse &&
           a.reference_index < b.reference_index))))
      est.best_index = static_cast<int>(i);
  }
  est.working_pose = est.candidates[est.best_index].pose;
  return est;
}

}  // namespace feepe
