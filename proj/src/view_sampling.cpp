#include "feepe/view_sampling.hpp"

#include <cmath>
#include <numbers>

#include "feepe/binary_io.hpp"

namespace feepe {

void DepthMap::save(const std::string& path) const {
  auto os = detail::open_out(path);
  detail::write_magic(os, "DMAP");
  detail::write_u32(os, 1);
  detail::write_u32(os, static_cast<std::uint32_t>(height));
  detail::write_u32(os, static_cast<std::uint32_t>(width));
  detail::write_f32(os, data.data(), data.size());
  if (!os) throw IoError("short write: " + path);
}

DepthMap DepthMap::load(const std::string& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "DMAP");
  const auto version = detail::read_u32(is, "DMAP version");
  if (version != 1) throw FormatError("DMAP: unsupported version");
  const auto h = detail::read_u32(is, "DMAP height");
  const auto w = detail::read_u32(is, "DMAP width");
  DepthMap dm(static_cast<int>(h), static_cast<int>(w));
  detail::read_f32(is, dm.data.data(), dm.data.size(), "DMAP");
  detail::expect_eof(is, "DMAP");
  return dm;
}

std::vector<Eigen::Vector3d> fibonacci_sphere(int n) {
  if (n < 1) throw InvalidCount("fibonacci_sphere: n must be >= 1");
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double az = i * golden_angle;
    pts.emplace_back(r * std::cos(az), r * std::sin(az), z);
  }
  return pts;
}

namespace {

// World->camera look-at: camera at `center`, optical axis (+z of the camera
// frame) pointing at the origin.
Pose look_at_origin(const Eigen::Vector3d& center) {
  const Eigen::Vector3d forward = (-center).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(forward.z()) > 1.0 - 1e-6) up = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d right = up.cross(forward).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r_wc;
  r_wc.row(0) = right;
  r_wc.row(1) = down;
  r_wc.row(2) = forward;
  return Pose(Rotation::from_matrix(r_wc), -(r_wc * center));
}

}  // namespace

std::vector<Viewpoint> build_viewpoints(int n_sphere, int n_inplane,
                                        double radius) {
  if (n_sphere < 1 || n_inplane < 1)
    throw InvalidCount("build_viewpoints: counts must be >= 1");
  if (!(radius > 0.0)) throw InvalidRadius("build_viewpoints: radius must be > 0");

  const auto dirs = fibonacci_sphere(n_sphere);
  std::vector<Viewpoint> out;
  out.reserve(std::size_t(n_sphere) * n_inplane);
  for (int s = 0; s < n_sphere; ++s) {
    const Pose base = look_at_origin(radius * dirs[s]);
    for (int i = 0; i < n_inplane; ++i) {
      const double roll = 2.0 * std::numbers::pi * i / n_inplane;
      const Pose roll_cam(Rotation::from_axis_angle(Eigen::Vector3d::UnitZ(), roll),
                          Eigen::Vector3d::Zero());
      Viewpoint vp;
      vp.camera_pose = roll_cam * base;
      vp.sphere_index = s;
      vp.inplane_index = i;
      vp.radius = radius;
      out.push_back(vp);
    }
  }
  return out;
}

SplatRender render_point_splat(std::span<const Eigen::Vector3d> model,
                               const Pose& camera_pose, const CameraIntrinsics& k,
                               int splat_radius) {
  if (model.empty()) throw EmptyModel("render_point_splat: empty model");
  k.validate();

  SplatRender out;
  out.depth = DepthMap(k.height, k.width);
  out.point_index.assign(std::size_t(k.height) * k.width, -1);

  const Eigen::Matrix3d r = camera_pose.rotation.matrix();
  const Eigen::Vector3d t = camera_pose.translation;
  for (std::size_t idx = 0; idx < model.size(); ++idx) {
    const Eigen::Vector3d pc = r * model[idx] + t;
    if (pc.z() <= 1e-9) continue;
    const double u = k.fx * pc.x() / pc.z() + k.cx;
    const double v = k.fy * pc.y() / pc.z() + k.cy;
    const int uc = static_cast<int>(std::lround(u));
    const int vc = static_cast<int>(std::lround(v));
    for (int dv = -splat_radius; dv <= splat_radius; ++dv) {
      for (int du = -splat_radius; du <= splat_radius; ++du) {
        const int px = uc + du;
        const int py = vc + dv;
        if (px < 0 || px >= k.width || py < 0 || py >= k.height) continue;
        if (du * du + dv * dv > splat_radius * splat_radius) continue;
        float& z = out.depth.at(py, px);
        if (z == 0.0f || pc.z() < z) {
          z = static_cast<float>(pc.z());
          out.point_index[std::size_t(py) * k.width + px] =
              static_cast<std::int32_t>(idx);
        }
      }
    }
  }
  return out;
}

DepthMap render_depth(std::span<const Eigen::Vector3d> model, const Viewpoint& vp,
                      const CameraIntrinsics& k, int splat_radius) {
  return render_point_splat(model, vp.camera_pose, k, splat_radius).depth;
}

}  // namespace feepe
