#include <doctest.h>

#include <filesystem>
#include <random>

#include "feepe/synth.hpp"
#include "feepe/template_store.hpp"

using namespace feepe;
namespace fs = std::filesystem;

namespace {
constexpr double kPi = 3.14159265358979323846;

SceneConfig small_scene(std::uint64_t seed) {
  SceneConfig cfg;
  cfg.model = make_cube_model(8, 0.08);
  cfg.intrinsics = {120, 120, 32, 32, 64, 64};
  cfg.camera_to_base =
      Pose(Rotation::from_axis_angle({1, 0, 0}, 0.3), {0.02, -0.01, 0.45});
  cfg.trajectory = make_screw_trajectory(5, {0, 0, 1}, 60.0 * kPi / 180.0,
                                         {0.01, 0, 0});
  cfg.seed = seed;
  cfg.descriptor_seed = 7;
  cfg.feature_dim = 32;
  return cfg;
}
}  // namespace

TEST_CASE("procedural models are non-empty and centered near the origin") {
  for (const auto& model :
       {make_gripper_model(), make_cube_model(), make_lshape_model()}) {
    REQUIRE(model.size() > 100);
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : model) c += p;
    c /= double(model.size());
    CHECK(c.norm() < 0.05);
    CHECK(bounding_sphere_radius(model) < 0.2);
  }
}

TEST_CASE("gripper model is geometrically symmetric under Rz(180)") {
  auto model = make_gripper_model(3000, 0.0);
  Rotation sym = Rotation::from_axis_angle({0, 0, 1}, kPi);
  double worst = 0.0;
  for (const auto& p : model) {
    Eigen::Vector3d q = sym * p;
    double best = 1e18;
    for (const auto& r : model) best = std::min(best, (q - r).norm());
    worst = std::max(worst, best);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("screw trajectory covers the requested angle smoothly") {
  auto traj = make_screw_trajectory(11, {0, 0, 1}, kPi, {0.05, 0, 0});
  REQUIRE(traj.size() == 11);
  CHECK(angular_distance(traj.front().rotation, traj.back().rotation) ==
        doctest::Approx(kPi).epsilon(1e-9));
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    double step = angular_distance(traj[i].rotation, traj[i + 1].rotation);
    CHECK(step < 25.0 * kPi / 180.0);
    CHECK(step > 1.0 * kPi / 180.0);
  }
  CHECK((traj.back().translation - traj.front().translation).norm() ==
        doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("symmetry descriptor ids pair up symmetric points") {
  auto model = make_gripper_model(1500, 0.0);
  Rotation sym = Rotation::from_axis_angle({0, 0, 1}, kPi);
  auto ids = symmetry_descriptor_ids(model, sym, 1e-3);
  REQUIRE(ids.size() == model.size());
  // a point and its rotated partner share an id
  int paired = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    Eigen::Vector3d q = sym * model[i];
    for (std::size_t j = 0; j < model.size(); ++j) {
      if ((q - model[j]).norm() < 1e-9) {
        CHECK(ids[i] == ids[j]);
        ++paired;
        break;
      }
    }
  }
  CHECK(paired > int(model.size()) * 9 / 10);
}

TEST_CASE("generate_sequence: gt self-consistency and determinism") {
  SceneConfig cfg = small_scene(3);
  auto frames = generate_sequence(cfg);
  REQUIRE(frames.size() == cfg.trajectory.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    CHECK(f.frame_id == int(i));
    Pose back = cfg.camera_to_base.inverse() * f.gt_camera_pose;
    // arccos resolution floors the angular distance near zero at ~3e-8
    CHECK(angular_distance(back.rotation, f.fk_pose.rotation) < 1e-7);
    CHECK((back.translation - f.fk_pose.translation).norm() < 1e-12);
    CHECK(f.depth.height == cfg.intrinsics.height);
    CHECK(f.features.dim == cfg.feature_dim);
  }

  auto again = generate_sequence(cfg);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(frames[i].depth.data == again[i].depth.data);
    CHECK(frames[i].features.data == again[i].features.data);
    CHECK(frames[i].mask.data == again[i].mask.data);
  }

  // a different seed changes the noise stream
  SceneConfig noisy = cfg;
  noisy.noise_sigma = 0.2;
  auto n1 = generate_sequence(noisy);
  noisy.seed = 4;
  auto n2 = generate_sequence(noisy);
  CHECK(n1[0].features.data != n2[0].features.data);
}

TEST_CASE("static trajectory produces identical frames") {
  SceneConfig cfg = small_scene(5);
  Pose fixed = cfg.trajectory[0];
  cfg.trajectory.assign(4, fixed);
  auto frames = generate_sequence(cfg);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    CHECK(frames[i].depth.data == frames[0].depth.data);
    CHECK(frames[i].features.data == frames[0].features.data);
  }
}

TEST_CASE("scene config validation") {
  SceneConfig cfg = small_scene(1);
  CHECK_NOTHROW(cfg.validate());
  cfg.trajectory.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_scene(1);
  cfg.noise_sigma = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_scene(1);
  cfg.model.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("sequence save/load round trips bit-exact") {
  fs::path dir = fs::temp_directory_path() / "feepe_seq_test";
  fs::remove_all(dir);
  SceneConfig cfg = small_scene(9);
  auto frames = generate_sequence(cfg);
  save_sequence(dir.string(), cfg, frames);

  LoadedSequence seq = load_sequence(dir.string());
  REQUIRE(seq.frames.size() == frames.size());
  CHECK(seq.model.size() == cfg.model.size());
  CHECK(seq.intrinsics.fx == cfg.intrinsics.fx);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(seq.frames[i].depth.data == frames[i].depth.data);
    CHECK(seq.frames[i].features.data == frames[i].features.data);
    CHECK(seq.frames[i].mask.data == frames[i].mask.data);
    // fk and relative gt agree exactly (static camera)
    Pose rel_fk = seq.frames[0].fk_pose.inverse() * seq.frames[i].fk_pose;
    Pose rel_gt =
        seq.frames[0].gt_camera_pose.inverse() * seq.frames[i].gt_camera_pose;
    CHECK(angular_distance(rel_fk.rotation, rel_gt.rotation) < 1e-7);
    CHECK((rel_fk.translation - rel_gt.translation).norm() < 1e-9);
  }
  fs::remove_all(dir);
}

TEST_CASE("model point file round trip") {
  fs::path dir = fs::temp_directory_path() / "feepe_model_test";
  fs::create_directories(dir);
  fs::path path = dir / "m.txt";
  auto model = make_lshape_model(200);
  save_model_points(path.string(), model);
  auto back = load_model_points(path.string());
  REQUIRE(back.size() == model.size());
  for (std::size_t i = 0; i < model.size(); ++i)
    CHECK((back[i] - model[i]).norm() < 1e-9);
  fs::remove_all(dir);
}
