#include "feepe/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "feepe/binary_io.hpp"
#include "feepe/json_io.hpp"
#include "feepe/metrics.hpp"

namespace feepe {

PipelineVariant variant_from_string(const std::string& s) {
  if (s == "A" || s == "pnp") return PipelineVariant::kPnpOnly;
  if (s == "B" || s == "single") return PipelineVariant::kSingleFrame;
  if (s == "C" || s == "temporal") return PipelineVariant::kTemporal;
  if (s == "D" || s == "full") return PipelineVariant::kFull;
  throw ConfigError("unknown pipeline variant: " + s);
}

std::string to_string(PipelineVariant v) {
  switch (v) {
    case PipelineVariant::kPnpOnly: return "A";
    case PipelineVariant::kSingleFrame: return "B";
    case PipelineVariant::kTemporal: return "C";
    case PipelineVariant::kFull: return "D";
  }
  return "?";
}

void PipelineConfig::validate() const {
  if (n_sphere < 1 || n_inplane < 1 || k_r < 1 || k_f < 1 || bow_k < 1 ||
      pool_cap < 1)
    throw ConfigError("config: counts must be >= 1");
  if (!(theta_deg > 0.0) || !(cluster_deg > 0.0) || !(cauchy_c_2d > 0.0) ||
      !(cauchy_c_3d > 0.0) || !(ransac.inlier_px > 0.0))
    throw ConfigError("config: thresholds must be > 0");
}

TemplateStoreParams PipelineConfig::template_params() const {
  TemplateStoreParams p;
  p.n_sphere = n_sphere;
  p.n_inplane = n_inplane;
  p.radius_scale = radius_scale;
  p.radius = radius;
  p.image_size = image_size;
  p.focal = focal;
  p.splat_radius = splat_radius;
  p.feature_dim = feature_dim;
  p.feature_stride = feature_stride;
  p.bow_k = bow_k;
  p.seed = seed;
  p.max_train_cells = max_train_cells;
  return p;
}

void PipelineConfig::apply_key(const std::string& key, const std::string& value) {
  auto as_int = [&] { return std::stoi(value); };
  auto as_double = [&] { return std::stod(value); };
  if (key == "n_sphere") n_sphere = as_int();
  else if (key == "n_inplane") n_inplane = as_int();
  else if (key == "image_size") image_size = as_int();
  else if (key == "radius_scale") radius_scale = as_double();
  else if (key == "radius") radius = as_double();
  else if (key == "focal") focal = as_double();
  else if (key == "splat_radius") splat_radius = as_int();
  else if (key == "feature_dim") feature_dim = as_int();
  else if (key == "feature_stride") feature_stride = as_int();
  else if (key == "bow_k") bow_k = as_int();
  else if (key == "max_train_cells") max_train_cells = std::stoul(value);
  else if (key == "k_r") k_r = as_int();
  else if (key == "min_sim") min_sim = as_double();
  else if (key == "inlier_px") ransac.inlier_px = as_double();
  else if (key == "max_iters") ransac.max_iters = as_int();
  else if (key == "confidence") ransac.confidence = as_double();
  else if (key == "k_f") k_f = as_int();
  else if (key == "theta_deg") theta_deg = as_double();
  else if (key == "cluster_deg") cluster_deg = as_double();
  else if (key == "pool_cap") pool_cap = as_int();
  else if (key == "cauchy_c_2d") cauchy_c_2d = as_double();
  else if (key == "cauchy_c_3d") cauchy_c_3d = as_double();
  else if (key == "lambda") lambda = as_double();
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "variant") variant = variant_from_string(value);
  else throw ConfigError("config: unknown key: " + key);
}

PipelineConfig PipelineConfig::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path);
  PipelineConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') continue;  // sections group keys, names are free
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) +
                        ": expected key = value");
    cfg.apply_key(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

namespace {

std::vector<double> depths_at_matches(const DepthMap& depth,
                                      std::span<const Match2D3D> matches) {
  std::vector<double> out;
  out.reserve(matches.size());
  for (const auto& m : matches) {
    const int c = static_cast<int>(std::floor(m.u.x()));
    const int r = static_cast<int>(std::floor(m.u.y()));
    if (r >= 0 && r < depth.height && c >= 0 && c < depth.width &&
        depth.valid(r, c))
      out.push_back(depth.at(r, c));
    else
      out.push_back(0.0);
  }
  return out;
}

SymmetryModes single_mode(const SymmetryModes& m, int idx) {
  SymmetryModes r;
  r.mode_poses = {m.mode_poses[idx]};
  r.members = {m.members[idx]};
  r.mode_inliers = {m.mode_inliers[idx]};
  return r;
}

bool qualifies_as_base(const SymmetryModes& modes) {
  return modes.bimodal() && modes.members[0].size() >= 2 &&
         modes.members[1].size() >= 2;
}

}  // namespace

Pipeline::Pipeline(const TemplateStore& store, const CameraIntrinsics& target_k,
                   const PipelineConfig& cfg)
    : store_(store),
      target_k_(target_k),
      cfg_(cfg),
      pool_(cfg.theta_deg * std::numbers::pi / 180.0,
            static_cast<std::size_t>(cfg.pool_cap)) {
  cfg_.validate();
  target_k_.validate();
}

FrameResult Pipeline::process_frame(int frame_id, const FeatureMap& features,
                                    const Mask& mask, const DepthMap& depth,
                                    const Pose& fk_pose) {
  const auto t0 = std::chrono::steady_clock::now();
  FrameResult result;
  result.frame_id = frame_id;

  EstimateParams ep;
  ep.k_r = cfg_.k_r;
  ep.min_sim = cfg_.min_sim;
  ep.ransac = cfg_.ransac;
  ep.seed = cfg_.seed * 0x100000001b3ULL + static_cast<std::uint64_t>(frame_id);

  std::optional<FrameEstimate> est;
  try {
    est = estimate_frame(features, mask, store_, target_k_, ep);
  } catch (const NoCandidate&) {
    est.reset();
  }

  if (!est) {
    // Propagate the previous pose through FK; flagged, pipeline continues.
    result.predicted_only = true;
    result.pose = prev_pose_ ? predict_pose(*prev_pose_, prev_fk_, fk_pose)
                             : Pose::identity();
    result.pool_size = static_cast<int>(pool_.entries().size());
    prev_pose_ = result.pose;
    prev_fk_ = fk_pose;
    result.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                  t0)
            .count();
    return result;
  }

  result.candidate_count = static_cast<int>(est->candidates.size());
  result.inlier_count = static_cast<int>(
      est->candidates[est->best_index].inliers.size());

  const bool temporal = cfg_.variant == PipelineVariant::kTemporal ||
                        cfg_.variant == PipelineVariant::kFull;
  const bool symmetry = cfg_.variant == PipelineVariant::kFull;

  const std::optional<Pose> predicted_opt =
      prev_pose_ ? std::optional<Pose>(predict_pose(*prev_pose_, prev_fk_, fk_pose))
                 : std::nullopt;

  // Symmetry clustering + disambiguation against the base frame. If even the
  // best mode pair disagrees with the FK relative motion by more than the
  // cluster threshold, every candidate sits in a wrong mode; such frames are
  // treated as not disambiguated and their candidates are excluded from the
  // refinement, falling back to the FK prediction.
  SymmetryModes cur_modes;
  std::optional<int> cur_mode;
  bool cur_gated = false;
  Pose working = est->working_pose;
  if (symmetry) {
    cur_modes = cluster_modes(est->candidates, cfg_.cluster_deg);
    if (base_frame_id_ && base_frame_id_ != frame_id) {
      const Pose fk_rel = base_fk_.inverse() * fk_pose;
      // Once a branch is pinned, only pairs against that base mode count;
      // otherwise a (flipped base, flipped current) pair would also look
      // FK-consistent and silently change branches mid-sequence.
      const SymmetryModes base_eff =
          base_mode_pin_ ? single_mode(base_modes_, *base_mode_pin_)
                         : base_modes_;
      const auto [bm, tm] = disambiguate(base_eff, cur_modes, fk_rel);
      const int bm_idx = base_mode_pin_ ? *base_mode_pin_ : bm;
      const Pose delta_sel =
          base_modes_.mode_poses[bm_idx].inverse() * cur_modes.mode_poses[tm];
      if (angular_distance(fk_rel, delta_sel) <=
          cfg_.cluster_deg * std::numbers::pi / 180.0) {
        cur_mode = tm;
        result.selected_mode = tm;
        working = cur_modes.mode_poses[tm];
        if (!base_mode_pin_) base_mode_pin_ = bm_idx;
      } else if (predicted_opt) {
        cur_gated = true;
        working = *predicted_opt;
      }
    }
  }

  const Pose predicted = predicted_opt ? *predicted_opt : working;

  Pose final_pose = working;
  if (cfg_.variant != PipelineVariant::kPnpOnly) {
    RobustLossParams loss;
    loss.cauchy_c_2d = cfg_.cauchy_c_2d;
    loss.cauchy_c_3d = cfg_.cauchy_c_3d;
    loss.lambda = cfg_.lambda;

    std::vector<Observation> obs;
    // Current frame: inlier sets of its candidates (restricted to the chosen
    // symmetry mode when disambiguated), delta = identity.
    const auto cur_depths_for = [&](const PoseCandidate& c) {
      return depths_at_matches(depth, c.inliers);
    };
    for (std::size_t ci = 0; !cur_gated && ci < est->candidates.size(); ++ci) {
      if (cur_mode) {
        const auto& members = cur_modes.members[*cur_mode];
        if (std::find(members.begin(), members.end(), static_cast<int>(ci)) ==
            members.end())
          continue;
      } else if (angular_distance(est->candidates[ci].pose, working) >
                 cfg_.cluster_deg * std::numbers::pi / 180.0) {
        // Without a disambiguated mode, fuse only reference views whose PnP
        // pose agrees with the working pose; the rest are misretrievals or
        // symmetry flips.
        continue;
      }
      Observation o;
      o.delta_pose = Pose::identity();
      o.matches = est->candidates[ci].inliers;
      o.target_depths = cur_depths_for(est->candidates[ci]);
      obs.push_back(std::move(o));
    }

    int used_keyframes = 0;
    if (temporal && !pool_.entries().empty()) {
      const auto kf_idx = select_keyframes(pool_, predicted, cfg_.k_f);
      for (int ki : kf_idx) {
        const PoolEntry& entry = pool_.entries()[ki];
        const auto it = extras_.find(entry.frame_id);
        if (it == extras_.end()) continue;
        const FrameExtras& ex = it->second;
        const Pose delta = fk_pose.inverse() * ex.fk_pose;

        std::optional<int> kf_mode;
        if (symmetry && base_frame_id_ && ex.modes.bimodal() &&
            entry.frame_id != *base_frame_id_) {
          const Pose fk_rel = base_fk_.inverse() * ex.fk_pose;
          const SymmetryModes base_eff =
              base_mode_pin_ ? single_mode(base_modes_, *base_mode_pin_)
                             : base_modes_;
          const auto [bm, km] = disambiguate(base_eff, ex.modes, fk_rel);
          const int bm_idx = base_mode_pin_ ? *base_mode_pin_ : bm;
          const Pose delta_sel =
              base_modes_.mode_poses[bm_idx].inverse() *
              ex.modes.mode_poses[km];
          // Keyframes whose best mode pair is FK-inconsistent carry only
          // wrong-mode candidates; skip them entirely.
          if (angular_distance(fk_rel, delta_sel) >
              cfg_.cluster_deg * std::numbers::pi / 180.0)
            continue;
          kf_mode = km;
        }
        bool contributed = false;
        for (std::size_t ci = 0; ci < entry.estimate.candidates.size(); ++ci) {
          if (kf_mode) {
            const auto& members = ex.modes.members[*kf_mode];
            if (std::find(members.begin(), members.end(),
                          static_cast<int>(ci)) == members.end())
              continue;
          }
          Observation o;
          o.delta_pose = delta;
          o.matches = entry.estimate.candidates[ci].inliers;
          if (ci < ex.candidate_depths.size())
            o.target_depths = ex.candidate_depths[ci];
          obs.push_back(std::move(o));
          contributed = true;
        }
        if (contributed) ++used_keyframes;
      }
    }
    result.keyframes_used = used_keyframes;

    std::size_t total = 0;
    for (const auto& o : obs) total += o.matches.size();
    if (total >= 4) {
      try {
        const auto opt = refine_pose(working, obs, target_k_, loss);
        final_pose = opt.pose;
        result.iterations = opt.iterations;
      } catch (const NumericalFailure&) {
        final_pose = working;
      }
    }
  }

  result.pose = final_pose;

  if (temporal && !cur_gated) {
    PoolEntry entry;
    entry.frame_id = frame_id;
    entry.estimate = *est;
    entry.fk_pose = fk_pose;
    entry.working_pose = final_pose;
    if (pool_.try_insert(std::move(entry))) {
      FrameExtras ex;
      ex.fk_pose = fk_pose;
      for (const auto& c : est->candidates)
        ex.candidate_depths.push_back(depths_at_matches(depth, c.inliers));
      if (symmetry) {
        ex.modes = cluster_modes(est->candidates, cfg_.cluster_deg);
        if (!base_frame_id_ && qualifies_as_base(ex.modes)) {
          base_frame_id_ = frame_id;
          base_modes_ = ex.modes;
          base_fk_ = fk_pose;
        }
      }
      extras_[frame_id] = std::move(ex);
      // Drop extras for evicted entries.
      for (auto it = extras_.begin(); it != extras_.end();) {
        const int id = it->first;
        const bool live = std::any_of(
            pool_.entries().begin(), pool_.entries().end(),
            [id](const PoolEntry& e) { return e.frame_id == id; });
        it = live ? std::next(it) : extras_.erase(it);
      }
    }
  }

  result.pool_size = static_cast<int>(pool_.entries().size());
  prev_pose_ = final_pose;
  prev_fk_ = fk_pose;
  result.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                t0)
          .count();
  return result;
}

std::vector<FrameResult> run_sequence(const LoadedSequence& seq,
                                      const TemplateStore& store,
                                      const PipelineConfig& cfg) {
  Pipeline pipeline(store, seq.intrinsics, cfg);
  std::vector<FrameResult> results;
  results.reserve(seq.frames.size());
  for (const auto& f : seq.frames)
    results.push_back(pipeline.process_frame(f.frame_id, f.features, f.mask,
                                             f.depth, f.fk_pose));
  return results;
}

void write_estimates(const std::string& path,
                     std::span<const FrameResult> results) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write estimates: " + path);
  for (const auto& r : results) {
    json j;
    j["frame_id"] = r.frame_id;
    j["pose"] = pose_to_json(r.pose);
    json flags = json::array();
    if (r.predicted_only) flags.push_back("predicted_only");
    j["flags"] = std::move(flags);
    // wall_time_ms stays in-memory only: the file must be byte-identical
    // across reruns with the same seed.
    j["diagnostics"] = json{{"candidates", r.candidate_count},
                            {"inliers", r.inlier_count},
                            {"pool_size", r.pool_size},
                            {"iterations", r.iterations},
                            {"keyframes", r.keyframes_used},
                            {"selected_mode", r.selected_mode}};
    os << j.dump() << '\n';
  }
}

std::vector<FrameResult> read_estimates(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open estimates: " + path);
  std::vector<FrameResult> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    FrameResult r;
    r.frame_id = j.at("frame_id").get<int>();
    r.pose = pose_from_json(j.at("pose"));
    for (const auto& f : j.at("flags"))
      if (f.get<std::string>() == "predicted_only") r.predicted_only = true;
    out.push_back(r);
  }
  return out;
}

EvalSummary evaluate_estimates(std::span<const FrameResult> results,
                               const LoadedSequence& seq,
                               std::span<const Eigen::Vector3d> model,
                               double max_threshold, bool include_predicted,
                               const std::string& curve_csv_path) {
  std::map<int, const SynthFrame*> gt;
  for (const auto& f : seq.frames) gt[f.frame_id] = &f;

  // Evaluation uses a subsampled model to bound the ADD-S nearest-neighbor
  // cost.
  std::vector<Eigen::Vector3d> eval_model(model.begin(), model.end());
  if (eval_model.size() > 2000) {
    std::vector<Eigen::Vector3d> sub;
    const double stride =
        static_cast<double>(eval_model.size()) / 2000.0;
    for (int i = 0; i < 2000; ++i)
      sub.push_back(eval_model[static_cast<std::size_t>(i * stride)]);
    eval_model = std::move(sub);
  }

  std::vector<double> add_errors, adds_errors;
  std::vector<int> missing;
  for (const auto& r : results) {
    if (r.predicted_only && !include_predicted) continue;
    const auto it = gt.find(r.frame_id);
    if (it == gt.end()) {
      missing.push_back(r.frame_id);
      continue;
    }
    add_errors.push_back(
        add_error(r.pose, it->second->gt_camera_pose, eval_model));
    adds_errors.push_back(
        adds_error(r.pose, it->second->gt_camera_pose, eval_model));
  }
  for (const auto& [id, f] : gt) {
    (void)f;
    if (std::none_of(results.begin(), results.end(),
                     [id](const FrameResult& r) { return r.frame_id == id; }))
      missing.push_back(id);
  }
  if (!missing.empty()) {
    std::ostringstream ss;
    ss << "evaluate: frames missing from ground truth:";
    for (int id : missing) ss << ' ' << id;
    throw ConfigError(ss.str());
  }
  if (add_errors.empty()) throw EmptyErrors("evaluate: no frames to score");

  const AccuracyCurve add_curve = auc(add_errors, max_threshold);
  const AccuracyCurve adds_curve = auc(adds_errors, max_threshold);
  if (!curve_csv_path.empty()) {
    std::ofstream os(curve_csv_path);
    if (!os) throw IoError("cannot write curve csv: " + curve_csv_path);
    os << "threshold,add_acc,adds_acc\n";
    for (std::size_t i = 0; i < add_curve.thresholds.size(); ++i)
      os << add_curve.thresholds[i] << ',' << add_curve.accuracy[i] << ','
         << adds_curve.accuracy[i] << '\n';
  }

  EvalSummary s;
  s.add_auc = add_curve.auc;
  s.adds_auc = adds_curve.auc;
  s.n_frames = static_cast<int>(add_errors.size());
  return s;
}

}  // namespace feepe
