#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "feepe/binary_io.hpp"
#include "feepe/features.hpp"
#include "feepe/view_sampling.hpp"

using namespace feepe;
namespace fs = std::filesystem;

namespace {

FeatureMap random_map(int h, int w, int d, int stride, std::uint64_t seed) {
  FeatureMap fm(h, w, d, stride);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n;
  for (auto& v : fm.data) v = n(rng);
  return fm;
}

std::vector<Eigen::Vector3d> blob_model(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<Eigen::Vector3d> m;
  for (int i = 0; i < n; ++i) m.push_back({u(rng), u(rng), u(rng)});
  return m;
}

}  // namespace

TEST_CASE("feature map io: bit-exact round trip, corruption detected") {
  fs::path dir = fs::temp_directory_path() / "feepe_fmap_test";
  fs::create_directories(dir);
  fs::path path = dir / "f.fmap";

  FeatureMap fm = random_map(8, 8, 16, 14, 51);
  fm.save(path.string());
  FeatureMap back = FeatureMap::load(path.string());
  CHECK(back.height == 8);
  CHECK(back.width == 8);
  CHECK(back.dim == 16);
  CHECK(back.stride == 14);
  CHECK(back.data == fm.data);

  fs::resize_file(path, fs::file_size(path) - 3);
  CHECK_THROWS_AS(FeatureMap::load(path.string()), FormatError);

  // trailing garbage is rejected too
  fm.save(path.string());
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out.write("zz", 2);
  }
  CHECK_THROWS_AS(FeatureMap::load(path.string()), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("mask io and cell foreground rule") {
  fs::path dir = fs::temp_directory_path() / "feepe_mask_test";
  fs::create_directories(dir);

  Mask m(4, 4);
  m.set(0, 0, true);
  m.set(0, 1, true);
  m.set(1, 0, true);
  fs::path path = dir / "m.mask";
  m.save(path.string());
  Mask back = Mask::load(path.string());
  CHECK(back.data == m.data);
  fs::remove_all(dir);

  // stride-2 cell (0,0) has 3 of 4 fg pixels -> foreground;
  // cell (0,1) has 0 -> background; exactly 50% counts as foreground.
  CHECK(m.cell_foreground(0, 0, 2));
  CHECK_FALSE(m.cell_foreground(0, 1, 2));
  Mask half(2, 2);
  half.set(0, 0, true);
  half.set(0, 1, true);
  CHECK(half.cell_foreground(0, 0, 2));
}

TEST_CASE("mask from depth marks positive pixels") {
  DepthMap dm(3, 3);
  dm.at(1, 1) = 0.5f;
  dm.at(2, 0) = 1.0f;
  Mask m = Mask::from_depth(dm);
  CHECK(m.at(1, 1));
  CHECK(m.at(2, 0));
  CHECK_FALSE(m.at(0, 0));
}

TEST_CASE("point descriptors: unit norm, pure function of (id, seed)") {
  auto a = point_descriptor(42, 7, 64);
  auto b = point_descriptor(42, 7, 64);
  auto c = point_descriptor(43, 7, 64);
  auto d = point_descriptor(42, 8, 64);
  CHECK(a.norm() == doctest::Approx(1.0f).epsilon(1e-6));
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a != d);
}

TEST_CASE("synthetic features: noiseless oracle is view-independent") {
  auto model = blob_model(300, 61);
  CameraIntrinsics k{150, 150, 32, 32, 64, 64};
  Pose cam1(Rotation::identity(), {0, 0, 0.4});
  Pose cam2(Rotation::from_axis_angle({0, 1, 0}, 0.3), {0.02, 0, 0.42});

  SyntheticFeatureParams p;
  p.dim = 64;
  p.stride = 1;
  p.noise_sigma = 0.0;
  p.splat_radius = 2;
  p.seed = 5;

  auto sr1 = render_point_splat(model, cam1, k, p.splat_radius);
  auto sr2 = render_point_splat(model, cam2, k, p.splat_radius);
  FeatureMap f1 = synthetic_features(model, sr1.depth, cam1, k, p);
  FeatureMap f2 = synthetic_features(model, sr2.depth, cam2, k, p);

  // wherever the same model point wins in both views, descriptors agree
  int checked = 0;
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) {
      std::int32_t i1 = sr1.index_at(r, c);
      if (i1 < 0) continue;
      for (int r2 = 0; r2 < 64 && checked < 200; ++r2)
        for (int c2 = 0; c2 < 64; ++c2) {
          if (sr2.index_at(r2, c2) != i1) continue;
          CHECK(f1.cell_vec(r, c).isApprox(f2.cell_vec(r2, c2), 1e-6f));
          ++checked;
          break;
        }
    }
  CHECK(checked > 50);
}

TEST_CASE("synthetic features: cross-point similarity near zero at D=64") {
  std::mt19937_64 rng(71);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto a = point_descriptor(2 * i, 9, 64);
    auto b = point_descriptor(2 * i + 1, 9, 64);
    sum += double(a.dot(b));
  }
  CHECK(std::abs(sum / n) < 0.05);
}

TEST_CASE("synthetic features: deterministic under identical seeds") {
  auto model = blob_model(100, 81);
  CameraIntrinsics k{120, 120, 24, 24, 48, 48};
  Pose cam(Rotation::identity(), {0, 0, 0.35});
  auto sr = render_point_splat(model, cam, k, 2);

  SyntheticFeatureParams p;
  p.noise_sigma = 0.3;
  p.seed = 3;
  p.noise_seed = 12;
  FeatureMap a = synthetic_features(model, sr.depth, cam, k, p);
  FeatureMap b = synthetic_features(model, sr.depth, cam, k, p);
  CHECK(a.data == b.data);

  p.noise_seed = 13;
  FeatureMap c = synthetic_features(model, sr.depth, cam, k, p);
  CHECK(a.data != c.data);
}

TEST_CASE("vocabulary: k=1 centroid is the normalized mean") {
  FeatureMap fm(2, 2, 3, 1);
  Mask mask(2, 2, 255);
  const float cells[4][3] = {
      {1, 0, 0}, {0.9f, 0.1f, 0}, {0.8f, 0.2f, 0}, {1, 0.05f, 0.05f}};
  Eigen::Vector3f mean = Eigen::Vector3f::Zero();
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector3f v(cells[i][0], cells[i][1], cells[i][2]);
    v.normalize();
    std::copy(v.data(), v.data() + 3, fm.cell(i / 2, i % 2));
    mean += v;
  }
  mean.normalize();

  VocabularyParams vp;
  vp.k = 1;
  vp.seed = 1;
  std::vector<FeatureMap> fms{fm};
  std::vector<Mask> masks{mask};
  BoWVocabulary vocab = build_vocabulary(fms, masks, vp);
  REQUIRE(vocab.k() == 1);
  CHECK((vocab.centroids.row(0).transpose() - mean).norm() < 1e-5f);
}

TEST_CASE("vocabulary: recovers two well-separated clusters") {
  const int d = 8;
  std::mt19937_64 rng(91);
  std::normal_distribution<float> n(0.0f, 0.02f);
  Eigen::VectorXf c1 = Eigen::VectorXf::Unit(d, 0);
  Eigen::VectorXf c2 = Eigen::VectorXf::Unit(d, 4);

  FeatureMap fm(10, 10, d, 1);
  Mask mask(10, 10, 255);
  Eigen::VectorXf mean1 = Eigen::VectorXf::Zero(d);
  Eigen::VectorXf mean2 = Eigen::VectorXf::Zero(d);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) {
      bool first = (r * 10 + c) % 2 == 0;
      Eigen::VectorXf v = first ? c1 : c2;
      for (int i = 0; i < d; ++i) v[i] += n(rng);
      v.normalize();
      std::copy(v.data(), v.data() + d, fm.cell(r, c));
      (first ? mean1 : mean2) += v;
    }
  mean1.normalize();
  mean2.normalize();

  VocabularyParams vp;
  vp.k = 2;
  vp.seed = 4;
  std::vector<FeatureMap> fms{fm};
  std::vector<Mask> masks{mask};
  BoWVocabulary vocab = build_vocabulary(fms, masks, vp);
  REQUIRE(vocab.k() == 2);

  // each empirical cluster mean is within 1e-3 of some learned centroid
  for (const Eigen::VectorXf& target : {mean1, mean2}) {
    float best = 1e9f;
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXf cen = vocab.centroids.row(i).transpose();
      best = std::min(best, (cen - target).norm());
    }
    CHECK(best < 1e-3f);
  }

  // deterministic under the same seed
  BoWVocabulary again = build_vocabulary(fms, masks, vp);
  CHECK(vocab.centroids == again.centroids);
  CHECK(vocab.idf == again.idf);
}

TEST_CASE("vocabulary errors and io") {
  FeatureMap fm(1, 2, 4, 1);
  Mask mask(1, 2, 255);
  fm.cell(0, 0)[0] = 1.0f;
  fm.cell(0, 1)[1] = 1.0f;
  std::vector<FeatureMap> fms{fm};
  std::vector<Mask> masks{mask};
  VocabularyParams vp;
  vp.k = 5;
  CHECK_THROWS_AS(build_vocabulary(fms, masks, vp), InsufficientData);

  vp.k = 2;
  BoWVocabulary vocab = build_vocabulary(fms, masks, vp);
  fs::path dir = fs::temp_directory_path() / "feepe_bowv_test";
  fs::create_directories(dir);
  fs::path path = dir / "v.bowv";
  vocab.save(path.string());
  BoWVocabulary back = BoWVocabulary::load(path.string());
  CHECK(back.centroids == vocab.centroids);
  CHECK(back.idf == vocab.idf);
  fs::remove_all(dir);
}

TEST_CASE("bow histogram: empty mask, one-hot, unit norm") {
  const int d = 4;
  BoWVocabulary vocab;
  vocab.centroids = Eigen::MatrixXf::Identity(3, d);
  vocab.idf = Eigen::VectorXf::Ones(3);

  FeatureMap fm(2, 2, d, 1);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) fm.cell(r, c)[1] = 1.0f;

  Mask empty(2, 2, 0);
  BoWHistogram h0 = bow_histogram(fm, empty, vocab);
  CHECK(h0.norm() == 0.0f);

  Mask full(2, 2, 255);
  BoWHistogram h = bow_histogram(fm, full, vocab);
  CHECK(h.norm() == doctest::Approx(1.0f).epsilon(1e-6));
  CHECK(h[1] == doctest::Approx(1.0f).epsilon(1e-6));

  FeatureMap bad(2, 2, d + 1, 1);
  CHECK_THROWS_AS(bow_histogram(bad, full, vocab), DimensionMismatch);
}

TEST_CASE("retrieval: self-match, count, sorted scores, ties by index") {
  std::mt19937_64 rng(101);
  std::normal_distribution<float> n;
  std::vector<BoWHistogram> hists;
  for (int i = 0; i < 12; ++i) {
    BoWHistogram h(6);
    for (int j = 0; j < 6; ++j) h[j] = std::abs(n(rng));
    h.normalize();
    hists.push_back(h);
  }

  auto top = retrieve_references(hists[7], hists, 1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].first == 7);
  CHECK(top[0].second == doctest::Approx(1.0f).epsilon(1e-6));

  auto five = retrieve_references(hists[0], hists, 5);
  REQUIRE(five.size() == 5);
  for (std::size_t i = 0; i + 1 < five.size(); ++i)
    CHECK(five[i].second >= five[i + 1].second);

  // exact duplicates tie; ascending index order among them
  std::vector<BoWHistogram> dup{hists[0], hists[1], hists[0], hists[0]};
  auto tied = retrieve_references(hists[0], dup, 3);
  REQUIRE(tied.size() == 3);
  CHECK(tied[0].first == 0);
  CHECK(tied[1].first == 2);
  CHECK(tied[2].first == 3);

  CHECK_THROWS_AS(retrieve_references(hists[0], hists, 13), InvalidK);
}
