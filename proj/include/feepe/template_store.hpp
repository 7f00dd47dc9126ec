#pragma once

#include <span>
#include <string>
#include <vector>

#include "feepe/features.hpp"
#include "feepe/geometry.hpp"
#include "feepe/view_sampling.hpp"

namespace feepe {

/// One rendered viewpoint with its depth, features and BoW histogram.
struct Template {
  Viewpoint viewpoint;
  DepthMap depth;
  FeatureMap features;
  Mask mask;
  BoWHistogram bow;
};

struct TemplateStoreParams {
  int n_sphere = 80;
  int n_inplane = 12;
  /// Sphere radius in multiples of the model bounding-sphere radius.
  double radius_scale = 2.5;
  /// Explicit radius in meters; > 0 overrides radius_scale.
  double radius = 0.0;
  int image_size = 256;
  double focal = 0.0;  // 0 = derived so the model fills ~40% of the image
  int splat_radius = 2;
  int feature_dim = 64;
  int feature_stride = 1;
  int bow_k = 1024;
  std::uint64_t seed = 0;
  std::size_t max_train_cells = 200000;
  /// Descriptor id map forwarded to the synthetic feature oracle.
  std::vector<std::uint32_t> descriptor_ids;
};

/// The full template set plus retrieval vocabulary, shared by matching and
/// the pipeline. Build renders depth via the point-splat renderer and fills
/// features from the synthetic oracle; externally rendered depth/features can
/// be dropped into the on-disk layout instead and reloaded.
struct TemplateStore {
  CameraIntrinsics intrinsics;
  int splat_radius = 2;
  std::vector<Template> templates;
  BoWVocabulary vocab;

  static TemplateStore build(std::span<const Eigen::Vector3d> model,
                             const TemplateStoreParams& params);

  void save(const std::string& dir) const;
  static TemplateStore load(const std::string& dir);
};

/// Model point set: text file, one "x y z" in meters per line, '#' comments.
std::vector<Eigen::Vector3d> load_model_points(const std::string& path);
void save_model_points(const std::string& path,
                       std::span<const Eigen::Vector3d> model);

double bounding_sphere_radius(std::span<const Eigen::Vector3d> model);

}  // namespace feepe
