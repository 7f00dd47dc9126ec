#include <doctest.h>

#include <algorithm>
#include <random>

#include "feepe/metrics.hpp"

using namespace feepe;

namespace {

constexpr double kPi = 3.14159265358979323846;

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  Rotation r(Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)));
  return Pose(r, {u(rng), u(rng), u(rng)});
}

std::vector<Eigen::Vector3d> random_model(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<Eigen::Vector3d> m;
  for (int i = 0; i < n; ++i) m.push_back({u(rng), u(rng), u(rng)});
  return m;
}

}  // namespace

TEST_CASE("add_error: identity, pure offset, brute-force oracle") {
  auto model = random_model(100, 3);
  std::mt19937_64 rng(5);
  Pose gt = random_pose(rng);
  CHECK(add_error(gt, gt, model) == 0.0);

  Pose off = gt;
  off.translation += Eigen::Vector3d(0.003, 0.004, 0.0);  // 5 mm offset
  CHECK(add_error(off, gt, model) == doctest::Approx(0.005).epsilon(1e-12));

  Pose est = random_pose(rng);
  double expect = 0.0;
  for (const auto& X : model) expect += (est * X - gt * X).norm();
  expect /= double(model.size());
  CHECK(add_error(est, gt, model) == doctest::Approx(expect).epsilon(1e-12));

  std::vector<Eigen::Vector3d> empty;
  CHECK_THROWS_AS(add_error(est, gt, empty), std::exception);
  CHECK_THROWS_AS(adds_error(est, gt, empty), std::exception);
}

TEST_CASE("adds_error: identity, oracle, <= add") {
  auto model = random_model(60, 7);
  std::mt19937_64 rng(9);
  Pose gt = random_pose(rng);
  CHECK(adds_error(gt, gt, model) == 0.0);

  Pose est = random_pose(rng);
  double expect = 0.0;
  for (const auto& X : model) {
    double best = 1e18;
    for (const auto& Y : model) best = std::min(best, (est * X - gt * Y).norm());
    expect += best;
  }
  expect /= double(model.size());
  CHECK(adds_error(est, gt, model) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("adds <= add on 10000 random cases") {
  auto model = random_model(25, 11);
  std::mt19937_64 rng(13);
  for (int i = 0; i < 10000; ++i) {
    Pose est = random_pose(rng);
    Pose gt = random_pose(rng);
    CHECK(adds_error(est, gt, model) <= add_error(est, gt, model) + 1e-15);
  }
}

TEST_CASE("symmetric point set: adds = 0 under the symmetry, add > 0") {
  // ring of 8 points in the xy-plane, exactly symmetric under Rz(180)
  std::vector<Eigen::Vector3d> ring;
  for (int i = 0; i < 8; ++i) {
    double a = i * kPi / 4.0;
    ring.push_back({0.05 * std::cos(a), 0.05 * std::sin(a), 0.0});
  }
  Pose gt;
  Pose est(Rotation::from_axis_angle({0, 0, 1}, kPi), Eigen::Vector3d::Zero());
  CHECK(add_error(est, gt, ring) > 0.01);
  CHECK(adds_error(est, gt, ring) < 1e-12);
}

TEST_CASE("add/adds invariant under model permutation") {
  auto model = random_model(40, 17);
  auto shuffled = model;
  std::mt19937_64 rng(19);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  Pose est = random_pose(rng);
  Pose gt = random_pose(rng);
  CHECK(add_error(est, gt, model) ==
        doctest::Approx(add_error(est, gt, shuffled)).epsilon(1e-12));
  CHECK(adds_error(est, gt, model) ==
        doctest::Approx(adds_error(est, gt, shuffled)).epsilon(1e-12));
}

TEST_CASE("auc: boundary cases") {
  std::vector<double> zeros(10, 0.0);
  auto c = auc(zeros, 0.01);
  CHECK(c.auc == 100.0);

  std::vector<double> big(10, 0.02);
  c = auc(big, 0.01);
  CHECK(c.auc == 0.0);

  std::vector<double> none;
  CHECK_THROWS_AS(auc(none, 0.01), EmptyErrors);
  CHECK_THROWS_AS(auc(zeros, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(auc(zeros, 0.01, 1), std::invalid_argument);
}

TEST_CASE("auc: single error at half the threshold gives ~50") {
  std::vector<double> half{0.005};
  auto c = auc(half, 0.01, 10000);
  CHECK(std::abs(c.auc - 50.0) < 0.5);
}

TEST_CASE("auc: curve monotone, permutation invariant, in range") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 0.02);
  std::vector<double> errs;
  for (int i = 0; i < 50; ++i) errs.push_back(u(rng));
  auto c = auc(errs, 0.01);
  REQUIRE(c.thresholds.size() == c.accuracy.size());
  for (std::size_t i = 0; i + 1 < c.accuracy.size(); ++i) {
    CHECK(c.accuracy[i] <= c.accuracy[i + 1]);
    CHECK(c.thresholds[i] < c.thresholds[i + 1]);
  }
  CHECK(c.auc >= 0.0);
  CHECK(c.auc <= 100.0);

  auto shuffled = errs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(auc(shuffled, 0.01).auc == c.auc);
}

TEST_CASE("auc of adds >= auc of add on generated record sets") {
  auto model = random_model(30, 29);
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> add_errs, adds_errs;
    for (int i = 0; i < 20; ++i) {
      Pose gt = random_pose(rng);
      Pose est = gt;
      std::normal_distribution<double> n(0.0, 0.004);
      est.translation += Eigen::Vector3d(n(rng), n(rng), n(rng));
      add_errs.push_back(add_error(est, gt, model));
      adds_errs.push_back(adds_error(est, gt, model));
    }
    CHECK(auc(adds_errs, 0.01).auc >= auc(add_errs, 0.01).auc);
  }
}
