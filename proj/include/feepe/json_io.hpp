#pragma once

#include <json.hpp>

#include "feepe/geometry.hpp"

namespace feepe {

using json = nlohmann::ordered_json;

inline json pose_to_json(const Pose& p) {
  const auto& q = p.rotation.quaternion();
  return json{{"q", {q.w(), q.x(), q.y(), q.z()}},
              {"t", {p.translation.x(), p.translation.y(), p.translation.z()}}};
}

inline Pose pose_from_json(const json& j) {
  const auto& q = j.at("q");
  const auto& t = j.at("t");
  if (q.size() != 4 || t.size() != 3)
    throw GeometryError("pose record: expected q[4], t[3]");
  return Pose(Rotation(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                       q[3].get<double>()),
              Eigen::Vector3d(t[0].get<double>(), t[1].get<double>(),
                              t[2].get<double>()));
}

inline json intrinsics_to_json(const CameraIntrinsics& k) {
  return json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
              {"width", k.width}, {"height", k.height}};
}

inline CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  k.validate();
  return k;
}

}  // namespace feepe
