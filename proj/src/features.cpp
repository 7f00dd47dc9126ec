#include "feepe/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "feepe/binary_io.hpp"

namespace feepe {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void FeatureMap::normalize() {
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      Eigen::Map<Eigen::VectorXf> v(cell(r, c), dim);
      const float n = v.norm();
      if (n > 1e-12f) v /= n;
    }
  }
}

void FeatureMap::save(const std::string& path) const {
  auto os = detail::open_out(path);
  detail::write_magic(os, "FMAP");
  detail::write_u32(os, 1);
  detail::write_u32(os, static_cast<std::uint32_t>(height));
  detail::write_u32(os, static_cast<std::uint32_t>(width));
  detail::write_u32(os, static_cast<std::uint32_t>(dim));
  detail::write_u32(os, static_cast<std::uint32_t>(stride));
  detail::write_f32(os, data.data(), data.size());
  if (!os) throw IoError("short write: " + path);
}

FeatureMap FeatureMap::load(const std::string& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "FMAP");
  if (detail::read_u32(is, "FMAP version") != 1)
    throw FormatError("FMAP: unsupported version");
  const auto h = detail::read_u32(is, "FMAP height");
  const auto w = detail::read_u32(is, "FMAP width");
  const auto d = detail::read_u32(is, "FMAP dim");
  const auto s = detail::read_u32(is, "FMAP stride");
  if (h == 0 || w == 0 || d == 0 || s == 0)
    throw FormatError("FMAP: zero dimension in header");
  FeatureMap fm(static_cast<int>(h), static_cast<int>(w), static_cast<int>(d),
                static_cast<int>(s));
  detail::read_f32(is, fm.data.data(), fm.data.size(), "FMAP");
  detail::expect_eof(is, "FMAP");
  return fm;
}

bool Mask::cell_foreground(int cell_r, int cell_c, int stride) const {
  int fg = 0, total = 0;
  for (int r = cell_r * stride; r < (cell_r + 1) * stride && r < height; ++r) {
    for (int c = cell_c * stride; c < (cell_c + 1) * stride && c < width; ++c) {
      ++total;
      if (at(r, c)) ++fg;
    }
  }
  return total > 0 && 2 * fg >= total;
}

Mask Mask::from_depth(const DepthMap& dm) {
  Mask m(dm.height, dm.width);
  for (int r = 0; r < dm.height; ++r)
    for (int c = 0; c < dm.width; ++c)
      if (dm.valid(r, c)) m.set(r, c, true);
  return m;
}

void Mask::save(const std::string& path) const {
  auto os = detail::open_out(path);
  detail::write_magic(os, "MASK");
  detail::write_u32(os, 1);
  detail::write_u32(os, static_cast<std::uint32_t>(height));
  detail::write_u32(os, static_cast<std::uint32_t>(width));
  os.write(reinterpret_cast<const char*>(data.data()),
           static_cast<std::streamsize>(data.size()));
  if (!os) throw IoError("short write: " + path);
}

Mask Mask::load(const std::string& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "MASK");
  if (detail::read_u32(is, "MASK version") != 1)
    throw FormatError("MASK: unsupported version");
  const auto h = detail::read_u32(is, "MASK height");
  const auto w = detail::read_u32(is, "MASK width");
  Mask m(static_cast<int>(h), static_cast<int>(w));
  is.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size()));
  if (static_cast<std::size_t>(is.gcount()) != m.data.size())
    throw FormatError("MASK: payload shorter than header promises");
  detail::expect_eof(is, "MASK");
  return m;
}

void BoWVocabulary::save(const std::string& path) const {
  auto os = detail::open_out(path);
  detail::write_magic(os, "BOWV");
  detail::write_u32(os, static_cast<std::uint32_t>(k()));
  detail::write_u32(os, static_cast<std::uint32_t>(dim()));
  for (int i = 0; i < k(); ++i) {
    Eigen::VectorXf row = centroids.row(i);
    detail::write_f32(os, row.data(), static_cast<std::size_t>(row.size()));
  }
  detail::write_f32(os, idf.data(), static_cast<std::size_t>(idf.size()));
  if (!os) throw IoError("short write: " + path);
}

BoWVocabulary BoWVocabulary::load(const std::string& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "BOWV");
  const auto k = detail::read_u32(is, "BOWV k");
  const auto d = detail::read_u32(is, "BOWV dim");
  if (k == 0 || d == 0) throw FormatError("BOWV: zero dimension in header");
  BoWVocabulary v;
  v.centroids.resize(k, d);
  std::vector<float> row(d);
  for (std::uint32_t i = 0; i < k; ++i) {
    detail::read_f32(is, row.data(), row.size(), "BOWV");
    for (std::uint32_t j = 0; j < d; ++j) v.centroids(i, j) = row[j];
  }
  v.idf.resize(k);
  detail::read_f32(is, v.idf.data(), k, "BOWV");
  detail::expect_eof(is, "BOWV");
  return v;
}

Eigen::VectorXf point_descriptor(std::uint64_t descriptor_id, std::uint64_t seed,
                                 int dim) {
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(descriptor_id + 1)));
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  Eigen::VectorXf v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  const float n = v.norm();
  if (n > 1e-12f) v /= n;
  return v;
}

FeatureMap synthetic_features(std::span<const Eigen::Vector3d> model,
                              const DepthMap& depth, const Pose& camera_pose,
                              const CameraIntrinsics& k,
                              const SyntheticFeatureParams& params) {
  if (depth.height != k.height || depth.width != k.width)
    throw DimensionMismatch("synthetic_features: depth size != intrinsics size");
  if (!params.descriptor_ids.empty() &&
      params.descriptor_ids.size() != model.size())
    throw DimensionMismatch("synthetic_features: descriptor_ids size mismatch");

  const int gh = k.height / params.stride;
  const int gw = k.width / params.stride;
  FeatureMap fm(gh, gw, params.dim, params.stride);

  // Re-splat to find the visible model point per pixel.
  const SplatRender splat =
      render_point_splat(model, camera_pose, k, params.splat_radius);

  std::mt19937_64 noise_rng(
      splitmix64(params.seed ^ splitmix64(params.noise_seed) ^ 0x5fee5feeULL));
  std::normal_distribution<float> gauss(0.0f, 1.0f);

  for (int r = 0; r < gh; ++r) {
    for (int c = 0; c < gw; ++c) {
      // Representative pixel: center of the cell.
      const int pr = std::min(k.height - 1, r * params.stride + params.stride / 2);
      const int pc = std::min(k.width - 1, c * params.stride + params.stride / 2);
      Eigen::Map<Eigen::VectorXf> out(fm.cell(r, c), params.dim);
      const std::int32_t idx =
          depth.valid(pr, pc) ? splat.index_at(pr, pc) : -1;
      if (idx >= 0) {
        const std::uint64_t did = params.descriptor_ids.empty()
                                      ? static_cast<std::uint64_t>(idx)
                                      : params.descriptor_ids[idx];
        out = point_descriptor(did, params.seed, params.dim);
        if (params.noise_sigma > 0.0) {
          for (int i = 0; i < params.dim; ++i)
            out[i] += static_cast<float>(params.noise_sigma) * gauss(noise_rng);
          const float n = out.norm();
          if (n > 1e-12f) out /= n;
        }
      } else {
        // Background cells are a pure per-cell function of the seed so that
        // identical poses yield identical frames.
        std::mt19937_64 cell_rng(splitmix64(
            params.seed ^ splitmix64(0xb6c0f00dULL + std::uint64_t(r) * gw + c)));
        std::normal_distribution<float> cell_gauss(0.0f, 1.0f);
        for (int i = 0; i < params.dim; ++i) out[i] = cell_gauss(cell_rng);
        const float n = out.norm();
        if (n > 1e-12f) out /= n;
      }
    }
  }
  return fm;
}

namespace {

/// Collect unit-normalized masked cell descriptors of one template.
void collect_cells(const FeatureMap& fm, const Mask& mask,
                   std::vector<Eigen::VectorXf>& out) {
  for (int r = 0; r < fm.height; ++r) {
    for (int c = 0; c < fm.width; ++c) {
      if (!mask.cell_foreground(r, c, fm.stride)) continue;
      Eigen::VectorXf v = fm.cell_vec(r, c);
      const float n = v.norm();
      if (n > 1e-12f) out.push_back(v / n);
    }
  }
}

int nearest_centroid(const Eigen::MatrixXf& centroids, const Eigen::VectorXf& v) {
  int best = 0;
  float best_dot = -2.0f;
  for (int i = 0; i < centroids.rows(); ++i) {
    const float d = centroids.row(i).dot(v);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

BoWVocabulary build_vocabulary(std::span<const FeatureMap> templates,
                               std::span<const Mask> masks,
                               const VocabularyParams& params) {
  if (templates.size() != masks.size())
    throw DimensionMismatch("build_vocabulary: templates/masks count mismatch");
  if (params.k < 1) throw InvalidK("build_vocabulary: k must be >= 1");

  std::vector<Eigen::VectorXf> cells;
  for (std::size_t i = 0; i < templates.size(); ++i)
    collect_cells(templates[i], masks[i], cells);
  if (cells.size() < static_cast<std::size_t>(params.k))
    throw InsufficientData("build_vocabulary: fewer masked cells than k");

  std::mt19937_64 rng(splitmix64(params.seed));
  if (params.max_train_cells > 0 && cells.size() > params.max_train_cells) {
    std::shuffle(cells.begin(), cells.end(), rng);
    cells.resize(params.max_train_cells);
  }

  const int dim = static_cast<int>(cells[0].size());
  const int n = static_cast<int>(cells.size());
  Eigen::MatrixXf data(n, dim);
  for (int i = 0; i < n; ++i) data.row(i) = cells[i];

  // k-means++ init on the unit sphere (distance = 1 - cosine).
  Eigen::MatrixXf centroids(params.k, dim);
  {
    std::uniform_int_distribution<int> pick(0, n - 1);
    centroids.row(0) = data.row(pick(rng));
    Eigen::VectorXf min_dist =
        (1.0f - (data * centroids.row(0).transpose()).array()).max(0.0f);
    for (int j = 1; j < params.k; ++j) {
      std::discrete_distribution<int> dd(min_dist.data(),
                                         min_dist.data() + n);
      centroids.row(j) = data.row(dd(rng));
      Eigen::VectorXf d =
          (1.0f - (data * centroids.row(j).transpose()).array()).max(0.0f);
      min_dist = min_dist.cwiseMin(d);
    }
  }

  std::vector<int> assign(n, -1);
  double prev_inertia = -1.0;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    // Assignment by max dot product, computed blockwise as a GEMM.
    Eigen::MatrixXf sims = data * centroids.transpose();  // n x k
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      int best;
      const float s = sims.row(i).maxCoeff(&best);
      assign[i] = best;
      inertia += std::max(0.0f, 1.0f - s);
    }
    // Update: normalized mean per cluster; empty clusters keep their centroid.
    Eigen::MatrixXf sums = Eigen::MatrixXf::Zero(params.k, dim);
    std::vector<int> counts(params.k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[i]) += data.row(i);
      ++counts[assign[i]];
    }
    for (int j = 0; j < params.k; ++j) {
      if (counts[j] == 0) continue;
      const float norm = sums.row(j).norm();
      if (norm > 1e-12f) centroids.row(j) = sums.row(j) / norm;
    }
    if (prev_inertia >= 0.0) {
      const double rel = std::abs(prev_inertia - inertia) /
                         std::max(prev_inertia, 1e-12);
      if (rel < params.tol) break;
    }
    prev_inertia = inertia;
  }

  BoWVocabulary vocab;
  vocab.centroids = centroids;

  // idf_w = ln(N / (1 + number of templates containing word w)).
  const auto n_templates = templates.size();
  Eigen::VectorXi doc_count = Eigen::VectorXi::Zero(params.k);
  std::vector<char> seen(params.k);
  for (std::size_t ti = 0; ti < n_templates; ++ti) {
    std::fill(seen.begin(), seen.end(), 0);
    std::vector<Eigen::VectorXf> tc;
    collect_cells(templates[ti], masks[ti], tc);
    for (const auto& v : tc) seen[nearest_centroid(centroids, v)] = 1;
    for (int j = 0; j < params.k; ++j) doc_count[j] += seen[j];
  }
  vocab.idf.resize(params.k);
  for (int j = 0; j < params.k; ++j)
    vocab.idf[j] = std::max(
        0.0f, std::log(static_cast<float>(n_templates) / (1.0f + doc_count[j])));
  return vocab;
}

BoWHistogram bow_histogram(const FeatureMap& fm, const Mask& mask,
                           const BoWVocabulary& vocab) {
  if (fm.dim != vocab.dim())
    throw DimensionMismatch("bow_histogram: descriptor dim != vocabulary dim");
  BoWHistogram h = BoWHistogram::Zero(vocab.k());
  std::vector<Eigen::VectorXf> cells;
  collect_cells(fm, mask, cells);
  for (const auto& v : cells) h[nearest_centroid(vocab.centroids, v)] += 1.0f;
  h = h.cwiseProduct(vocab.idf);
  const float n = h.norm();
  if (n > 1e-12f) h /= n;
  return h;
}

std::vector<std::pair<int, float>> retrieve_references(
    const BoWHistogram& target, std::span<const BoWHistogram> template_hists,
    int k_r) {
  if (k_r < 1 || static_cast<std::size_t>(k_r) > template_hists.size())
    throw InvalidK("retrieve_references: k_r out of range");
  std::vector<std::pair<int, float>> scored;
  scored.reserve(template_hists.size());
  for (std::size_t i = 0; i < template_hists.size(); ++i) {
    if (template_hists[i].size() != target.size())
      throw DimensionMismatch("retrieve_references: histogram size mismatch");
    scored.emplace_back(static_cast<int>(i), target.dot(template_hists[i]));
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  scored.resize(k_r);
  return scored;
}

}  // namespace feepe
