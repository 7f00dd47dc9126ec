#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "feepe/geometry.hpp"
#include "feepe/view_sampling.hpp"

namespace feepe {

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidK : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense descriptor grid: height x width cells of dimension `dim`, with
/// `stride` image pixels per cell. Cell (r, c) covers pixels
/// [c*stride, (c+1)*stride) x [r*stride, (r+1)*stride); its center pixel is
/// ((c + 0.5) * stride, (r + 0.5) * stride).
struct FeatureMap {
  int height = 0;
  int width = 0;
  int dim = 0;
  int stride = 1;
  std::vector<float> data;  // row-major, D contiguous per cell

  FeatureMap() = default;
  FeatureMap(int h, int w, int d, int s)
      : height(h), width(w), dim(d), stride(s),
        data(std::size_t(h) * w * d, 0.0f) {}

  float* cell(int r, int c) {
    return data.data() + (std::size_t(r) * width + c) * dim;
  }
  const float* cell(int r, int c) const {
    return data.data() + (std::size_t(r) * width + c) * dim;
  }
  Eigen::Map<const Eigen::VectorXf> cell_vec(int r, int c) const {
    return Eigen::Map<const Eigen::VectorXf>(cell(r, c), dim);
  }
  Eigen::Vector2d cell_center_px(int r, int c) const {
    return {(c + 0.5) * stride, (r + 0.5) * stride};
  }

  /// L2-normalize every cell in place (cells with near-zero norm are left).
  void normalize();

  void save(const std::string& path) const;
  static FeatureMap load(const std::string& path);
};

/// Binary foreground mask at image resolution, values 0 or 255.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), data(std::size_t(h) * w, fill) {}

  bool at(int r, int c) const { return data[std::size_t(r) * width + c] != 0; }
  void set(int r, int c, bool fg) {
    data[std::size_t(r) * width + c] = fg ? 255 : 0;
  }

  /// A grid cell is foreground when >= 50% of its pixels are foreground.
  bool cell_foreground(int cell_r, int cell_c, int stride) const;

  static Mask from_depth(const DepthMap& dm);

  void save(const std::string& path) const;
  static Mask load(const std::string& path);
};

struct BoWVocabulary {
  Eigen::MatrixXf centroids;  // k x D, rows unit-normalized
  Eigen::VectorXf idf;        // k

  int k() const { return static_cast<int>(centroids.rows()); }
  int dim() const { return static_cast<int>(centroids.cols()); }

  void save(const std::string& path) const;
  static BoWVocabulary load(const std::string& path);
};

using BoWHistogram = Eigen::VectorXf;

/// Deterministic per-point unit descriptor, a pure function of
/// (descriptor id, seed).
Eigen::VectorXf point_descriptor(std::uint64_t descriptor_id, std::uint64_t seed,
                                 int dim);

struct SyntheticFeatureParams {
  int dim = 64;
  int stride = 1;
  double noise_sigma = 0.0;
  int splat_radius = 2;
  std::uint64_t seed = 0;
  /// Extra entropy for the noise / invalid-cell stream only; point
  /// descriptors stay a pure function of (descriptor id, seed).
  std::uint64_t noise_seed = 0;
  /// Optional model-point index -> descriptor id map; symmetric appearance is
  /// emulated by giving symmetry-related points the same id. Empty = identity.
  std::vector<std::uint32_t> descriptor_ids;
};

/// Feature oracle: every valid-depth cell receives the descriptor of the
/// nearest visible model point (splat winner) plus Gaussian noise,
/// renormalized; invalid cells receive seeded random unit descriptors.
FeatureMap synthetic_features(std::span<const Eigen::Vector3d> model,
                              const DepthMap& depth, const Pose& camera_pose,
                              const CameraIntrinsics& k,
                              const SyntheticFeatureParams& params);

struct VocabularyParams {
  int k = 1024;
  std::uint64_t seed = 0;
  int max_iterations = 50;
  double tol = 1e-4;
  /// Seeded subsample cap on training cells; 0 disables subsampling.
  std::size_t max_train_cells = 200000;
};

BoWVocabulary build_vocabulary(std::span<const FeatureMap> templates,
                               std::span<const Mask> masks,
                               const VocabularyParams& params);

BoWHistogram bow_histogram(const FeatureMap& fm, const Mask& mask,
                           const BoWVocabulary& vocab);

/// Top-k_r template indices by descending cosine similarity of histograms,
/// ties broken by ascending index.
std::vector<std::pair<int, float>> retrieve_references(
    const BoWHistogram& target, std::span<const BoWHistogram> template_hists,
    int k_r);

}  // namespace feepe
