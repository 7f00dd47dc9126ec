#include <doctest.h>

#include <algorithm>
#include <random>

#include "feepe/temporal.hpp"

using namespace feepe;

namespace {

constexpr double kPi = 3.14159265358979323846;

Pose rz(double deg) {
  return Pose(Rotation::from_axis_angle({0, 0, 1}, deg * kPi / 180.0),
              Eigen::Vector3d::Zero());
}

PoolEntry entry(int id, const Pose& p) {
  PoolEntry e;
  e.frame_id = id;
  e.working_pose = p;
  return e;
}

PoseCandidate candidate(const Pose& p, int inliers) {
  PoseCandidate c;
  c.pose = p;
  c.inliers.resize(inliers);
  return c;
}

Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Rotation(Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)));
}

double min_pairwise(const std::vector<Rotation>& rs) {
  double best = kPi;
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = i + 1; j < rs.size(); ++j)
      best = std::min(best, angular_distance(rs[i], rs[j]));
  return best;
}

}  // namespace

TEST_CASE("predict_pose: zero motion, exact chain, base translation") {
  std::mt19937_64 rng(3);
  Pose prev(random_rotation(rng), {0.1, 0.2, 0.5});
  Pose fk(random_rotation(rng), {0.4, -0.1, 0.3});
  Pose same = predict_pose(prev, fk, fk);
  CHECK(angular_distance(same.rotation, prev.rotation) < 1e-12);
  CHECK((same.translation - prev.translation).norm() < 1e-12);

  // static camera: p_t = T * fk_t exactly when p_{t-1} = T * fk_{t-1}
  Pose cam_to_base(random_rotation(rng), {0.2, 0.1, 0.6});
  Pose fk2(random_rotation(rng), {0.3, 0.3, 0.2});
  Pose predicted = predict_pose(cam_to_base * fk, fk, fk2);
  Pose truth = cam_to_base * fk2;
  CHECK(angular_distance(predicted.rotation, truth.rotation) < 1e-9);
  CHECK((predicted.translation - truth.translation).norm() < 1e-9);

  // pure base-frame translation d moves the prediction by R_prev * d
  Eigen::Vector3d d(0.05, -0.02, 0.01);
  Pose fk3(fk.rotation, fk.translation + fk.rotation * d);
  Pose moved = predict_pose(prev, fk, fk3);
  CHECK((moved.translation - (prev.translation + prev.rotation * d)).norm() <
        1e-9);
}

TEST_CASE("memory pool: gate examples") {
  MemoryPool pool(10.0 * kPi / 180.0);
  CHECK(pool.try_insert(entry(0, rz(0))));

  CHECK_FALSE(pool.try_insert(entry(1, rz(5))));
  CHECK(pool.try_insert(entry(2, rz(15))));
  CHECK(pool.entries().size() == 2);
}

TEST_CASE("memory pool: greedy insertion sequence 0..40 deg keeps 0,12,24,36") {
  MemoryPool pool(10.0 * kPi / 180.0);
  for (int deg = 0; deg <= 40; deg += 4) pool.try_insert(entry(deg, rz(deg)));
  std::vector<int> ids;
  for (const auto& e : pool.entries()) ids.push_back(e.frame_id);
  std::sort(ids.begin(), ids.end());
  CHECK(ids == std::vector<int>{0, 12, 24, 36});
}

TEST_CASE("memory pool: invariant after random-walk insertions, capped") {
  const double theta = 10.0 * kPi / 180.0;
  MemoryPool pool(theta, 16);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 0.05);
  Rotation r;
  for (int i = 0; i < 2000; ++i) {
    Eigen::Vector3d step(n(rng), n(rng), n(rng));
    if (step.norm() > 0)
      r = Rotation::from_axis_angle(step.normalized(), step.norm()) * r;
    pool.try_insert(entry(i, Pose(r, Eigen::Vector3d::Zero())));
    CHECK(pool.entries().size() <= 16);
  }
  std::vector<Rotation> rs;
  for (const auto& e : pool.entries()) rs.push_back(e.working_pose.rotation);
  CHECK(min_pairwise(rs) > theta);
}

TEST_CASE("select_keyframes: two-entry and tie examples") {
  MemoryPool pool(1e-3);
  pool.try_insert(entry(0, rz(20)));
  pool.try_insert(entry(1, rz(40)));
  auto sel = select_keyframes(pool, rz(0), 2);
  REQUIRE(sel.size() == 2);
  CHECK(pool.entries()[sel[0]].frame_id == 1);  // 40 deg is farthest from 0

  MemoryPool pool3(1e-3);
  pool3.try_insert(entry(0, rz(20)));
  pool3.try_insert(entry(1, rz(40)));
  pool3.try_insert(entry(2, rz(60)));
  sel = select_keyframes(pool3, rz(0), 2);
  REQUIRE(sel.size() == 2);
  CHECK(pool3.entries()[sel[0]].frame_id == 2);  // 60 first
  // 20 gives min(20,40)=20; 40 gives min(40,20)=20; tie -> lower frame_id
  CHECK(pool3.entries()[sel[1]].frame_id == 0);

  // k_f >= pool size returns everything, no duplicates
  sel = select_keyframes(pool3, rz(0), 8);
  std::vector<int> ids;
  for (int i : sel) ids.push_back(pool3.entries()[i].frame_id);
  std::sort(ids.begin(), ids.end());
  CHECK(ids == std::vector<int>{0, 1, 2});
}

TEST_CASE("select_keyframes: greedy achieves >= half the brute-force optimum") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> psize(2, 6);
  std::uniform_int_distribution<int> ksize(1, 3);
  for (int inst = 0; inst < 100; ++inst) {
    int n = psize(rng);
    int k_f = std::min(ksize(rng), n);
    MemoryPool pool(1e-9);
    std::vector<Rotation> rs;
    for (int i = 0; i < n; ++i) {
      Rotation r = random_rotation(rng);
      rs.push_back(r);
      pool.try_insert(entry(i, Pose(r, Eigen::Vector3d::Zero())));
    }
    REQUIRE(pool.entries().size() == std::size_t(n));
    Pose start(random_rotation(rng), Eigen::Vector3d::Zero());

    auto sel = select_keyframes(pool, start, k_f);
    REQUIRE(int(sel.size()) == k_f);
    std::vector<Rotation> chosen{start.rotation};
    for (int i : sel) chosen.push_back(pool.entries()[i].working_pose.rotation);
    double greedy = min_pairwise(chosen);

    // brute force over all size-k_f subsets (objective includes the start)
    double best = 0.0;
    std::vector<bool> pick(n, false);
    std::fill(pick.end() - k_f, pick.end(), true);
    do {
      std::vector<Rotation> subset{start.rotation};
      for (int i = 0; i < n; ++i) if (pick[i]) subset.push_back(rs[i]);
      best = std::max(best, min_pairwise(subset));
    } while (std::next_permutation(pick.begin(), pick.end()));

    CHECK(greedy >= 0.5 * best - 1e-12);
  }
}

TEST_CASE("cluster_modes: unimodal, bimodal, three clusters trimmed") {
  CHECK_THROWS_AS(cluster_modes({}, 15.0), NoCandidates);

  std::vector<PoseCandidate> tight{candidate(rz(0), 10), candidate(rz(5), 8),
                                   candidate(rz(3), 12)};
  auto m = cluster_modes(tight, 15.0);
  CHECK_FALSE(m.bimodal());
  REQUIRE(m.mode_poses.size() == 1);
  // mode pose = member with most inliers
  CHECK(angular_distance(m.mode_poses[0].rotation, rz(3).rotation) < 1e-9);

  std::vector<PoseCandidate> bi{candidate(rz(0), 5), candidate(rz(2), 9),
                                candidate(rz(180), 7), candidate(rz(181), 6)};
  m = cluster_modes(bi, 15.0);
  REQUIRE(m.bimodal());
  double d = angular_distance(m.mode_poses[0], m.mode_poses[1]);
  CHECK(d > 170.0 * kPi / 180.0);
  CHECK(m.mode_inliers[0] + m.mode_inliers[1] == 27);

  std::vector<PoseCandidate> single{candidate(rz(33), 4)};
  m = cluster_modes(single, 15.0);
  CHECK(m.mode_poses.size() == 1);

  // three clusters: sizes 3, 2, 1 -> the singleton is dropped
  std::vector<PoseCandidate> tri{candidate(rz(0), 1),   candidate(rz(2), 1),
                                 candidate(rz(4), 1),   candidate(rz(90), 1),
                                 candidate(rz(92), 1),  candidate(rz(180), 99)};
  m = cluster_modes(tri, 15.0);
  REQUIRE(m.bimodal());
  for (const auto& mp : m.mode_poses)
    CHECK(angular_distance(mp.rotation, rz(180).rotation) >
          30.0 * kPi / 180.0);
}

TEST_CASE("disambiguate: consistent pairs, unimodal, zero motion") {
  SymmetryModes base;
  base.mode_poses = {rz(0), rz(180)};
  base.members = {{0}, {1}};
  base.mode_inliers = {20, 10};
  SymmetryModes cur;
  cur.mode_poses = {rz(30), rz(210)};
  cur.members = {{0}, {1}};
  cur.mode_inliers = {15, 5};

  // both consistent pairs give omega = 0; (0,30) has 35 combined inliers
  // vs 15 for (180,210), so the inlier tie-break picks it
  auto [b, c] = disambiguate(base, cur, rz(30));
  CHECK(b == 0);
  CHECK(c == 0);
  // and the selected pair attains the minimal objective
  double chosen = angular_distance(
      rz(30), base.mode_poses[b].inverse() * cur.mode_poses[c]);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double other = angular_distance(
          rz(30), base.mode_poses[i].inverse() * cur.mode_poses[j]);
      CHECK(chosen <= other + 1e-12);
    }

  // cross pairs are off by 180 degrees and lose
  auto [b2, c2] = disambiguate(base, cur, rz(210));
  CHECK(((b2 == 0 && c2 == 1) || (b2 == 1 && c2 == 0)));

  SymmetryModes uni;
  uni.mode_poses = {rz(45)};
  uni.members = {{0}};
  uni.mode_inliers = {3};
  auto [b3, c3] = disambiguate(uni, uni, rz(123));
  CHECK(b3 == 0);
  CHECK(c3 == 0);

  // zero motion with identical modes picks matching indices
  auto [b4, c4] = disambiguate(base, base, Pose::identity());
  CHECK(b4 == c4);
}
