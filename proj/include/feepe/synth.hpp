#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "feepe/features.hpp"
#include "feepe/geometry.hpp"
#include "feepe/view_sampling.hpp"

namespace feepe {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Procedural test models (meters, centered near the origin).
std::vector<Eigen::Vector3d> make_gripper_model(int approx_points = 3000,
                                                double asymmetry = 0.0);
std::vector<Eigen::Vector3d> make_cube_model(int per_edge = 12,
                                             double side = 0.08);
std::vector<Eigen::Vector3d> make_lshape_model(int approx_points = 2000);

/// Smooth screw motion: frame s in [0, 1] rotates by s * total angle about
/// `axis` (plus an optional secondary rotation) and drifts by s * drift.
std::vector<Pose> make_screw_trajectory(int n_frames,
                                        const Eigen::Vector3d& axis,
                                        double total_angle_rad,
                                        const Eigen::Vector3d& drift,
                                        const Eigen::Vector3d& secondary_axis =
                                            Eigen::Vector3d::Zero(),
                                        double secondary_angle_rad = 0.0);

struct SceneConfig {
  std::vector<Eigen::Vector3d> model;
  Pose camera_to_base;
  CameraIntrinsics intrinsics;
  std::vector<Pose> trajectory;  // base-frame end-effector poses
  double noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  /// Optional appearance symmetry: points related by this model-frame
  /// rotation share descriptors.
  std::optional<Rotation> symmetry;
  double symmetry_pair_tol = 1e-3;  // meters, pairing tolerance
  std::uint64_t seed = 0;
  /// Seed of the per-point descriptor table; must match the template store's
  /// seed so target and template features agree.
  std::uint64_t descriptor_seed = 0;
  int feature_dim = 64;
  int feature_stride = 1;
  int splat_radius = 2;

  void validate() const;
};

struct SynthFrame {
  int frame_id = 0;
  DepthMap depth;
  Mask mask;
  FeatureMap features;
  Pose fk_pose;        // end-effector in base frame
  Pose gt_camera_pose; // = camera_to_base * fk_pose, exactly
};

/// Model-point index -> descriptor id identifying symmetry-related points.
std::vector<std::uint32_t> symmetry_descriptor_ids(
    std::span<const Eigen::Vector3d> model, const Rotation& symmetry,
    double pair_tol);

std::vector<SynthFrame> generate_sequence(const SceneConfig& cfg);

/// On-disk sequence: manifest.json + per-frame depth/mask/feature files,
/// plus the model as model.txt.
void save_sequence(const std::string& dir, const SceneConfig& cfg,
                   std::span<const SynthFrame> frames);

struct LoadedSequence {
  CameraIntrinsics intrinsics;
  Pose camera_to_base;  // ground truth, for evaluation only
  std::vector<SynthFrame> frames;
  std::vector<Eigen::Vector3d> model;
};

LoadedSequence load_sequence(const std::string& dir);

/// Scene description from a JSON config file (CLI `synth` input).
SceneConfig scene_config_from_json_file(const std::string& path);

}  // namespace feepe
