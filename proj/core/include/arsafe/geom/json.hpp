#pragma once

#include "arsafe/geom/camera.hpp"
#include "arsafe/geom/cloud.hpp"
#include "arsafe/geom/frames.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace arsafe::geom {

// Transforms: {"from","to","rotation":[9 row-major],"translation":[3],"unit":"m"}.
// Intrinsics: pixels; distortion as {"k1","k2","p1","p2","k3"}.
// Rigs: {"left","right","left_to_right","rectified":{...}|null}.
void to_json(nlohmann::json& j, const RigidTransform& t);
void from_json(const nlohmann::json& j, RigidTransform& t);
RigidTransform transform_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const CameraIntrinsics& k);
void from_json(const nlohmann::json& j, CameraIntrinsics& k);

void to_json(nlohmann::json& j, const StereoRig& rig);
StereoRig rig_from_json(const nlohmann::json& j);

nlohmann::json vec_to_json(const Vec3& v);
Vec3 vec_from_json(const nlohmann::json& j);
nlohmann::json points_to_json(const std::vector<Vec3>& pts);
std::vector<Vec3> points_from_json(const nlohmann::json& j);

nlohmann::json graph_to_json(const FrameGraph& g);
FrameGraph graph_from_json(const nlohmann::json& j);

/// Reads/writes a whole JSON document. Parse errors become IoError naming the file.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Length in meters read from {"value": x, "unit": "mm"} or a bare number (meters).
double length_from_json(const nlohmann::json& j);

}  // namespace arsafe::geom
