#include "feepe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "feepe/binary_io.hpp"
#include "feepe/json_io.hpp"
#include "feepe/template_store.hpp"

namespace fs = std::filesystem;

namespace feepe {

namespace {

void box_points(std::vector<Eigen::Vector3d>& out, std::mt19937_64& rng, int n,
                const Eigen::Vector3d& center, const Eigen::Vector3d& size) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < n; ++i)
    out.emplace_back(center.x() + u(rng) * size.x(),
                     center.y() + u(rng) * size.y(),
                     center.z() + u(rng) * size.z());
}

}  // namespace

std::vector<Eigen::Vector3d> make_gripper_model(int approx_points,
                                                double asymmetry) {
  // One half (palm half + finger at +x), mirrored by 180 deg about z so the
  // point pairing under that rotation is exact.
  std::mt19937_64 rng(0x9217feULL);
  const int half = approx_points / 2;
  const int n_palm = half * 2 / 3;
  const int n_finger = half - n_palm;

  std::vector<Eigen::Vector3d> a;
  a.reserve(half);
  box_points(a, rng, n_palm, {0.02, 0.0, -0.02}, {0.04, 0.04, 0.03});
  box_points(a, rng, n_finger, {0.025, 0.0, 0.025}, {0.012, 0.02, 0.06});

  std::vector<Eigen::Vector3d> model;
  model.reserve(2 * a.size());
  model.insert(model.end(), a.begin(), a.end());
  const Rotation rz180 =
      Rotation::from_axis_angle(Eigen::Vector3d::UnitZ(), std::numbers::pi);
  for (const auto& p : a) model.push_back(rz180 * p);

  if (asymmetry > 0.0) {
    for (auto& p : model)
      if (p.x() > 0.0 && p.z() > 0.0) p.z() *= 1.0 + asymmetry;
  }
  return model;
}

std::vector<Eigen::Vector3d> make_cube_model(int per_edge, double side) {
  std::vector<Eigen::Vector3d> pts;
  const double step = side / (per_edge - 1);
  for (int i = 0; i < per_edge; ++i)
    for (int j = 0; j < per_edge; ++j)
      for (int k = 0; k < per_edge; ++k) {
        // Surface shell only.
        if (i != 0 && i != per_edge - 1 && j != 0 && j != per_edge - 1 &&
            k != 0 && k != per_edge - 1)
          continue;
        pts.emplace_back(-side / 2 + i * step, -side / 2 + j * step,
                         -side / 2 + k * step);
      }
  return pts;
}

std::vector<Eigen::Vector3d> make_lshape_model(int approx_points) {
  std::mt19937_64 rng(0x15a9eULL);
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(approx_points);
  const int n1 = approx_points * 2 / 3;
  box_points(pts, rng, n1, {0.0, 0.0, 0.0}, {0.10, 0.03, 0.03});
  box_points(pts, rng, approx_points - n1, {0.035, 0.0, 0.045},
             {0.03, 0.03, 0.06});
  return pts;
}

std::vector<Pose> make_screw_trajectory(int n_frames,
                                        const Eigen::Vector3d& axis,
                                        double total_angle_rad,
                                        const Eigen::Vector3d& drift,
                                        const Eigen::Vector3d& secondary_axis,
                                        double secondary_angle_rad) {
  if (n_frames < 1)
    throw ConfigError("make_screw_trajectory: n_frames must be >= 1");
  std::vector<Pose> traj;
  traj.reserve(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    const double s = n_frames == 1 ? 0.0 : static_cast<double>(i) / (n_frames - 1);
    Rotation r = Rotation::from_axis_angle(axis, s * total_angle_rad);
    if (secondary_angle_rad != 0.0 && secondary_axis.norm() > 1e-12)
      r = r * Rotation::from_axis_angle(secondary_axis, s * secondary_angle_rad);
    traj.emplace_back(r, s * drift);
  }
  return traj;
}

void SceneConfig::validate() const {
  if (model.empty()) throw ConfigError("scene: model is empty");
  if (trajectory.empty()) throw ConfigError("scene: trajectory is empty");
  if (noise_sigma < 0.0) throw ConfigError("scene: noise_sigma must be >= 0");
  if (outlier_fraction < 0.0 || outlier_fraction > 1.0)
    throw ConfigError("scene: outlier_fraction must be in [0, 1]");
  intrinsics.validate();
}

std::vector<std::uint32_t> symmetry_descriptor_ids(
    std::span<const Eigen::Vector3d> model, const Rotation& symmetry,
    double pair_tol) {
  const std::size_t n = model.size();
  std::vector<std::uint32_t> ids(n);
  std::vector<std::uint32_t> partner(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = static_cast<std::uint32_t>(i);
    const Eigen::Vector3d rp = symmetry * model[i];
    std::size_t best = i;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const double d2 = (rp - model[j]).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = j;
      }
    }
    partner[i] = best_d2 <= pair_tol * pair_tol
                     ? static_cast<std::uint32_t>(best)
                     : static_cast<std::uint32_t>(i);
  }
  // Propagate the canonical (minimum) id through symmetry orbits.
  for (int pass = 0; pass < 4; ++pass)
    for (std::size_t i = 0; i < n; ++i)
      ids[i] = std::min({ids[i], ids[partner[i]], partner[ids[i]]});
  return ids;
}

std::vector<SynthFrame> generate_sequence(const SceneConfig& cfg) {
  cfg.validate();

  std::vector<std::uint32_t> descriptor_ids;
  if (cfg.symmetry)
    descriptor_ids =
        symmetry_descriptor_ids(cfg.model, *cfg.symmetry, cfg.symmetry_pair_tol);

  std::vector<SynthFrame> frames;
  frames.reserve(cfg.trajectory.size());
  for (std::size_t t = 0; t < cfg.trajectory.size(); ++t) {
    SynthFrame f;
    f.frame_id = static_cast<int>(t);
    f.fk_pose = cfg.trajectory[t];
    f.gt_camera_pose = cfg.camera_to_base * f.fk_pose;

    const SplatRender splat = render_point_splat(cfg.model, f.gt_camera_pose,
                                                 cfg.intrinsics,
                                                 cfg.splat_radius);
    f.depth = splat.depth;
    f.mask = Mask::from_depth(f.depth);

    SyntheticFeatureParams sf;
    sf.dim = cfg.feature_dim;
    sf.stride = cfg.feature_stride;
    sf.noise_sigma = cfg.noise_sigma;
    sf.splat_radius = cfg.splat_radius;
    sf.seed = cfg.descriptor_seed;
    sf.noise_seed = cfg.seed * 1000003ULL + t;
    sf.descriptor_ids = descriptor_ids;
    f.features = synthetic_features(cfg.model, f.depth, f.gt_camera_pose,
                                    cfg.intrinsics, sf);

    if (cfg.outlier_fraction > 0.0) {
      // Replace a fraction of foreground cells with random unit descriptors.
      std::vector<std::pair<int, int>> fg;
      for (int r = 0; r < f.features.height; ++r)
        for (int c = 0; c < f.features.width; ++c)
          if (f.mask.cell_foreground(r, c, cfg.feature_stride))
            fg.emplace_back(r, c);
      std::mt19937_64 rng(cfg.seed * 2654435761ULL + t + 17);
      std::shuffle(fg.begin(), fg.end(), rng);
      const std::size_t n_out = static_cast<std::size_t>(
          cfg.outlier_fraction * static_cast<double>(fg.size()));
      std::normal_distribution<float> gauss(0.0f, 1.0f);
      for (std::size_t i = 0; i < n_out; ++i) {
        Eigen::Map<Eigen::VectorXf> v(
            f.features.cell(fg[i].first, fg[i].second), cfg.feature_dim);
        for (int d = 0; d < cfg.feature_dim; ++d) v[d] = gauss(rng);
        const float nn = v.norm();
        if (nn > 1e-12f) v /= nn;
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

void save_sequence(const std::string& dir, const SceneConfig& cfg,
                   std::span<const SynthFrame> frames) {
  fs::create_directories(dir);
  save_model_points((fs::path(dir) / "model.txt").string(), cfg.model);

  json manifest;
  manifest["intrinsics"] = intrinsics_to_json(cfg.intrinsics);
  manifest["camera_to_base"] = pose_to_json(cfg.camera_to_base);
  manifest["model"] = "model.txt";
  json entries = json::array();
  for (const auto& f : frames) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05d", f.frame_id);
    const std::string depth_file = std::string(name) + ".dmap";
    const std::string mask_file = std::string(name) + ".mask";
    const std::string feat_file = std::string(name) + ".fmap";
    f.depth.save((fs::path(dir) / depth_file).string());
    f.mask.save((fs::path(dir) / mask_file).string());
    f.features.save((fs::path(dir) / feat_file).string());
    json e;
    e["id"] = f.frame_id;
    e["depth_path"] = depth_file;
    e["mask_path"] = mask_file;
    e["feature_path"] = feat_file;
    e["fk_pose"] = pose_to_json(f.fk_pose);
    e["gt_pose"] = pose_to_json(f.gt_camera_pose);
    entries.push_back(std::move(e));
  }
  manifest["frames"] = std::move(entries);
  std::ofstream os(fs::path(dir) / "manifest.json");
  if (!os) throw IoError("cannot write sequence manifest in " + dir);
  os << manifest.dump(2) << '\n';
}

LoadedSequence load_sequence(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw IoError("cannot open sequence manifest in " + dir);
  json manifest = json::parse(is);

  LoadedSequence seq;
  seq.intrinsics = intrinsics_from_json(manifest.at("intrinsics"));
  seq.camera_to_base = pose_from_json(manifest.at("camera_to_base"));
  if (manifest.contains("model"))
    seq.model = load_model_points(
        (fs::path(dir) / manifest.at("model").get<std::string>()).string());
  for (const auto& e : manifest.at("frames")) {
    SynthFrame f;
    f.frame_id = e.at("id").get<int>();
    f.depth = DepthMap::load(
        (fs::path(dir) / e.at("depth_path").get<std::string>()).string());
    f.mask = Mask::load(
        (fs::path(dir) / e.at("mask_path").get<std::string>()).string());
    f.features = FeatureMap::load(
        (fs::path(dir) / e.at("feature_path").get<std::string>()).string());
    f.fk_pose = pose_from_json(e.at("fk_pose"));
    f.gt_camera_pose = pose_from_json(e.at("gt_pose"));
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

SceneConfig scene_config_from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open scene config: " + path);
  json j = json::parse(is);

  SceneConfig cfg;
  const auto& jm = j.at("model");
  if (jm.contains("path")) {
    cfg.model = load_model_points(jm.at("path").get<std::string>());
  } else {
    const auto gen = jm.value("generator", std::string("gripper"));
    const int n = jm.value("points", 3000);
    if (gen == "gripper")
      cfg.model = make_gripper_model(n, jm.value("asymmetry", 0.0));
    else if (gen == "cube")
      cfg.model = make_cube_model();
    else if (gen == "lshape")
      cfg.model = make_lshape_model(n);
    else
      throw ConfigError("scene: unknown model generator: " + gen);
  }

  cfg.camera_to_base = pose_from_json(j.at("camera_to_base"));
  cfg.intrinsics = intrinsics_from_json(j.at("intrinsics"));

  const auto& jt = j.at("trajectory");
  const int n_frames = jt.at("n_frames").get<int>();
  auto vec3 = [](const json& a) {
    return Eigen::Vector3d(a[0].get<double>(), a[1].get<double>(),
                           a[2].get<double>());
  };
  const double deg = std::numbers::pi / 180.0;
  cfg.trajectory = make_screw_trajectory(
      n_frames, vec3(jt.at("axis")), jt.at("total_angle_deg").get<double>() * deg,
      jt.contains("drift") ? vec3(jt.at("drift")) : Eigen::Vector3d::Zero(),
      jt.contains("secondary_axis") ? vec3(jt.at("secondary_axis"))
                                    : Eigen::Vector3d::Zero(),
      jt.value("secondary_angle_deg", 0.0) * deg);

  cfg.noise_sigma = j.value("noise_sigma", 0.0);
  cfg.outlier_fraction = j.value("outlier_fraction", 0.0);
  if (j.contains("symmetry")) {
    const auto& js = j.at("symmetry");
    cfg.symmetry = Rotation::from_axis_angle(
        vec3(js.at("axis")), js.at("angle_deg").get<double>() * deg);
    cfg.symmetry_pair_tol = js.value("pair_tol", 1e-3);
  }
  cfg.seed = j.value("seed", 0ULL);
  cfg.descriptor_seed = j.value("descriptor_seed", 0ULL);
  cfg.feature_dim = j.value("feature_dim", 64);
  cfg.feature_stride = j.value("feature_stride", 1);
  cfg.splat_radius = j.value("splat_radius", 2);
  cfg.validate();
  return cfg;
}

}  // namespace feepe
