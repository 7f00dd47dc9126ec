#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "feepe/matching.hpp"
#include "feepe/optimizer.hpp"
#include "feepe/synth.hpp"
#include "feepe/template_store.hpp"
#include "feepe/temporal.hpp"

namespace feepe {

/// Ablation variants: A = PnP only, B = single-frame refinement,
/// C = + temporal keyframes, D = + symmetry disambiguation (full method).
enum class PipelineVariant { kPnpOnly, kSingleFrame, kTemporal, kFull };

PipelineVariant variant_from_string(const std::string& s);
std::string to_string(PipelineVariant v);

struct PipelineConfig {
  // Template generation
  int n_sphere = 80;
  int n_inplane = 12;
  int image_size = 256;
  double radius_scale = 2.5;
  double radius = 0.0;
  double focal = 0.0;
  int splat_radius = 2;
  int feature_dim = 64;
  int feature_stride = 1;
  int bow_k = 1024;
  std::size_t max_train_cells = 200000;

  // Matching / PnP
  int k_r = 5;
  double min_sim = 0.5;
  RansacParams ransac;

  // Temporal
  int k_f = 8;
  double theta_deg = 10.0;
  double cluster_deg = 15.0;
  int pool_cap = 64;

  // Optimizer
  double cauchy_c_2d = 2.0;
  double cauchy_c_3d = 0.01;
  double lambda = 1.0;

  std::uint64_t seed = 0;
  PipelineVariant variant = PipelineVariant::kFull;

  void validate() const;
  TemplateStoreParams template_params() const;

  /// Key-value config file with [sections]; unknown keys are rejected.
  static PipelineConfig load_file(const std::string& path);
  void apply_key(const std::string& key, const std::string& value);
};

struct FrameResult {
  int frame_id = 0;
  Pose pose;
  bool predicted_only = false;
  int candidate_count = 0;
  int inlier_count = 0;
  int pool_size = 0;
  int iterations = 0;
  int keyframes_used = 0;
  int selected_mode = -1;  // -1 = no disambiguation this frame
  double wall_time_ms = 0.0;
};

/// Sequential pose-estimation pipeline: retrieval + PnP per frame, symmetry
/// clustering and disambiguation, memory-pool gating, FPS keyframe selection
/// and multi-keyframe robust refinement. Frames must be fed in order.
class Pipeline {
 public:
  Pipeline(const TemplateStore& store, const CameraIntrinsics& target_k,
           const PipelineConfig& cfg);

  FrameResult process_frame(int frame_id, const FeatureMap& features,
                            const Mask& mask, const DepthMap& depth,
                            const Pose& fk_pose);

  const MemoryPool& pool() const { return pool_; }

 private:
  struct FrameExtras {
    std::vector<std::vector<double>> candidate_depths;  // per candidate, per match
    SymmetryModes modes;
    Pose fk_pose;
  };

  const TemplateStore& store_;
  CameraIntrinsics target_k_;
  PipelineConfig cfg_;
  MemoryPool pool_;
  std::map<int, FrameExtras> extras_;

  std::optional<Pose> prev_pose_;
  Pose prev_fk_;
  std::optional<int> base_frame_id_;
  SymmetryModes base_modes_;
  Pose base_fk_;
  // Base mode index locked in by the first FK-consistent disambiguation;
  // keeps the whole sequence on one symmetry branch.
  std::optional<int> base_mode_pin_;
};

/// Drive the pipeline over a loaded sequence.
std::vector<FrameResult> run_sequence(const LoadedSequence& seq,
                                      const TemplateStore& store,
                                      const PipelineConfig& cfg);

/// JSON-lines estimate records: {frame_id, pose:{q,t}, flags, diagnostics}.
void write_estimates(const std::string& path,
                     std::span<const FrameResult> results);
std::vector<FrameResult> read_estimates(const std::string& path);

struct EvalSummary {
  double add_auc = 0.0;
  double adds_auc = 0.0;
  int n_frames = 0;
};

EvalSummary evaluate_estimates(std::span<const FrameResult> results,
                               const LoadedSequence& seq,
                               std::span<const Eigen::Vector3d> model,
                               double max_threshold, bool include_predicted,
                               const std::string& curve_csv_path = "");

}  // namespace feepe
