#include "feepe/template_store.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "feepe/binary_io.hpp"
#include "feepe/json_io.hpp"

namespace fs = std::filesystem;

namespace feepe {

double bounding_sphere_radius(std::span<const Eigen::Vector3d> model) {
  double r2 = 0.0;
  for (const auto& p : model) r2 = std::max(r2, p.squaredNorm());
  return std::sqrt(r2);
}

std::vector<Eigen::Vector3d> load_model_points(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open model file: " + path);
  std::vector<Eigen::Vector3d> pts;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double x, y, z;
    if (ss >> x >> y >> z) pts.emplace_back(x, y, z);
  }
  if (pts.empty()) throw FormatError("model file holds no points: " + path);
  return pts;
}

void save_model_points(const std::string& path,
                       std::span<const Eigen::Vector3d> model) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open model file for writing: " + path);
  os.precision(12);
  for (const auto& p : model)
    os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

TemplateStore TemplateStore::build(std::span<const Eigen::Vector3d> model,
                                   const TemplateStoreParams& params) {
  if (model.empty()) throw EmptyModel("TemplateStore::build: empty model");

  const double rb = bounding_sphere_radius(model);
  const double radius =
      params.radius > 0.0 ? params.radius : params.radius_scale * rb;

  TemplateStore store;
  store.splat_radius = params.splat_radius;
  store.intrinsics.width = params.image_size;
  store.intrinsics.height = params.image_size;
  store.intrinsics.cx = params.image_size / 2.0;
  store.intrinsics.cy = params.image_size / 2.0;
  const double focal = params.focal > 0.0
                           ? params.focal
                           : 0.2 * params.image_size * radius / std::max(rb, 1e-9);
  store.intrinsics.fx = focal;
  store.intrinsics.fy = focal;
  store.intrinsics.validate();

  const auto viewpoints =
      build_viewpoints(params.n_sphere, params.n_inplane, radius);
  store.templates.reserve(viewpoints.size());
  for (const auto& vp : viewpoints) {
    Template t;
    t.viewpoint = vp;
    t.depth = render_depth(model, vp, store.intrinsics, params.splat_radius);
    t.mask = Mask::from_depth(t.depth);
    SyntheticFeatureParams sf;
    sf.dim = params.feature_dim;
    sf.stride = params.feature_stride;
    sf.noise_sigma = 0.0;
    sf.splat_radius = params.splat_radius;
    sf.seed = params.seed;
    sf.descriptor_ids = params.descriptor_ids;
    t.features =
        synthetic_features(model, t.depth, vp.camera_pose, store.intrinsics, sf);
    store.templates.push_back(std::move(t));
  }

  std::vector<FeatureMap> fms;
  std::vector<Mask> masks;
  fms.reserve(store.templates.size());
  masks.reserve(store.templates.size());
  for (const auto& t : store.templates) {
    fms.push_back(t.features);
    masks.push_back(t.mask);
  }
  VocabularyParams vp;
  vp.k = params.bow_k;
  vp.seed = params.seed;
  vp.max_train_cells = params.max_train_cells;
  store.vocab = build_vocabulary(fms, masks, vp);

  for (auto& t : store.templates)
    t.bow = bow_histogram(t.features, t.mask, store.vocab);
  return store;
}

void TemplateStore::save(const std::string& dir) const {
  fs::create_directories(dir);
  json manifest;
  manifest["intrinsics"] = intrinsics_to_json(intrinsics);
  manifest["splat_radius"] = splat_radius;
  manifest["vocabulary"] = "vocab.bowv";
  vocab.save((fs::path(dir) / "vocab.bowv").string());

  json entries = json::array();
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const auto& t = templates[i];
    char name[32];
    std::snprintf(name, sizeof(name), "tpl_%05zu", i);
    const std::string depth_file = std::string(name) + ".dmap";
    const std::string feat_file = std::string(name) + ".fmap";
    const std::string mask_file = std::string(name) + ".mask";
    t.depth.save((fs::path(dir) / depth_file).string());
    t.features.save((fs::path(dir) / feat_file).string());
    t.mask.save((fs::path(dir) / mask_file).string());
    json e;
    e["pose"] = pose_to_json(t.viewpoint.camera_pose);
    e["sphere_index"] = t.viewpoint.sphere_index;
    e["inplane_index"] = t.viewpoint.inplane_index;
    e["radius"] = t.viewpoint.radius;
    e["depth"] = depth_file;
    e["features"] = feat_file;
    e["mask"] = mask_file;
    e["bow"] = std::vector<float>(t.bow.data(), t.bow.data() + t.bow.size());
    entries.push_back(std::move(e));
  }
  manifest["templates"] = std::move(entries);
  std::ofstream os(fs::path(dir) / "manifest.json");
  if (!os) throw IoError("cannot write template manifest in " + dir);
  os << manifest.dump(2) << '\n';
}

TemplateStore TemplateStore::load(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw IoError("cannot open template manifest in " + dir);
  json manifest = json::parse(is);

  TemplateStore store;
  store.intrinsics = intrinsics_from_json(manifest.at("intrinsics"));
  store.splat_radius = manifest.at("splat_radius").get<int>();
  store.vocab = BoWVocabulary::load(
      (fs::path(dir) / manifest.at("vocabulary").get<std::string>()).string());

  for (const auto& e : manifest.at("templates")) {
    Template t;
    t.viewpoint.camera_pose = pose_from_json(e.at("pose"));
    t.viewpoint.sphere_index = e.at("sphere_index").get<int>();
    t.viewpoint.inplane_index = e.at("inplane_index").get<int>();
    t.viewpoint.radius = e.at("radius").get<double>();
    t.depth = DepthMap::load(
        (fs::path(dir) / e.at("depth").get<std::string>()).string());
    t.features = FeatureMap::load(
        (fs::path(dir) / e.at("features").get<std::string>()).string());
    t.mask = Mask::load(
        (fs::path(dir) / e.at("mask").get<std::string>()).string());
    const auto bow = e.at("bow").get<std::vector<float>>();
    t.bow = Eigen::Map<const Eigen::VectorXf>(bow.data(),
                                              static_cast<int>(bow.size()));
    store.templates.push_back(std::move(t));
  }
  return store;
}

}  // namespace feepe
