#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "feepe/geometry.hpp"

namespace feepe {

struct InvalidCount : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidRadius : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyModel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense depth image in meters, row-major; 0.0 marks an invalid pixel.
struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  DepthMap() = default;
  DepthMap(int h, int w) : height(h), width(w), data(std::size_t(h) * w, 0.0f) {}

  float& at(int r, int c) { return data[std::size_t(r) * width + c]; }
  float at(int r, int c) const { return data[std::size_t(r) * width + c]; }
  bool valid(int r, int c) const { return at(r, c) > 0.0f; }

  void save(const std::string& path) const;
  static DepthMap load(const std::string& path);
};

/// One sampled template viewpoint. camera_pose maps model frame -> camera
/// frame; the camera center sits on the sampling sphere and looks at the
/// model origin.
struct Viewpoint {
  Pose camera_pose;
  int sphere_index = 0;
  int inplane_index = 0;
  double radius = 1.0;
};

/// Golden-angle lattice: z_i = 1 - 2(i+0.5)/n, azimuth_i = i*pi*(3-sqrt(5)).
std::vector<Eigen::Vector3d> fibonacci_sphere(int n);

/// Sphere positions x in-plane rolls. Look-at uses global +z up, falling
/// back to +x when the view direction is within 1e-6 of +-z; rolls are
/// applied about the optical axis after look-at, uniformly in [0, 2pi).
std::vector<Viewpoint> build_viewpoints(int n_sphere, int n_inplane, double radius);

/// Depth + winning model point index per pixel from a z-buffered splat.
struct SplatRender {
  DepthMap depth;
  std::vector<std::int32_t> point_index;  // -1 where invalid

  std::int32_t index_at(int r, int c) const {
    return point_index[std::size_t(r) * depth.width + c];
  }
};

SplatRender render_point_splat(std::span<const Eigen::Vector3d> model,
                               const Pose& camera_pose, const CameraIntrinsics& k,
                               int splat_radius);

DepthMap render_depth(std::span<const Eigen::Vector3d> model, const Viewpoint& vp,
                      const CameraIntrinsics& k, int splat_radius);

}  // namespace feepe
