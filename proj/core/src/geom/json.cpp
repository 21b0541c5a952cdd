#include "arsafe/geom/json.hpp"

#include "arsafe/error.hpp"
#include "arsafe/geom/io.hpp"

#include <fstream>

namespace arsafe::geom {

using nlohmann::json;

namespace {

std::string frame_name(FrameId f) { return std::string(to_string(f)); }

}  // namespace

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw InvalidArgument("expected a 3-element array, got " + j.dump());
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json points_to_json(const std::vector<Vec3>& pts) {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back(vec_to_json(p));
    return arr;
}

std::vector<Vec3> points_from_json(const json& j) {
    std::vector<Vec3> out;
    out.reserve(j.size());
    for (const auto& e : j) out.push_back(vec_from_json(e));
    return out;
}

double length_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    return j.at("value").get<double>() * meters_per_unit(unit_from_string(j.value("unit", "m")));
}

void to_json(json& j, const RigidTransform& t) {
    const Mat3& r = t.rotation();
    j = json{{"from", frame_name(t.from())},
             {"to", frame_name(t.to())},
             {"rotation", {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)}},
             {"translation", vec_to_json(t.translation())},
             {"unit", "m"}};
}

RigidTransform transform_from_json(const json& j) {
    const auto& rj = j.at("rotation");
    if (!rj.is_array() || rj.size() != 9) throw InvalidArgument("transform rotation must have 9 entries");
    Mat3 r;
    for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = rj[i].get<double>();
    const double scale = meters_per_unit(unit_from_string(j.value("unit", "m")));
    return RigidTransform(r, vec_from_json(j.at("translation")) * scale,
                          frame_from_string(j.at("from").get<std::string>()),
                          frame_from_string(j.at("to").get<std::string>()));
}

void from_json(const json& j, RigidTransform& t) { t = transform_from_json(j); }

void to_json(json& j, const CameraIntrinsics& k) {
    j = json{{"fx", k.fx},
             {"fy", k.fy},
             {"cx", k.cx},
             {"cy", k.cy},
             {"width", k.width},
             {"height", k.height},
             {"distortion",
              {{"k1", k.k1()}, {"k2", k.k2()}, {"p1", k.p1()}, {"p2", k.p2()}, {"k3", k.k3()}}},
             {"unit", "px"}};
}

void from_json(const json& j, CameraIntrinsics& k) {
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
    k.distortion = {0, 0, 0, 0, 0};
    if (j.contains("distortion")) {
        const auto& d = j.at("distortion");
        if (d.is_array()) {
            for (std::size_t i = 0; i < d.size() && i < 5; ++i) k.distortion[i] = d[i].get<double>();
        } else {
            k.distortion = {d.value("k1", 0.0), d.value("k2", 0.0), d.value("p1", 0.0), d.value("p2", 0.0),
                            d.value("k3", 0.0)};
        }
    }
    k.validate();
}

void to_json(json& j, const StereoRig& rig) {
    j = json{{"left", rig.left}, {"right", rig.right}, {"left_to_right", rig.left_to_right},
             {"baseline_m", rig.baseline()}};
    if (rig.rectified) {
        j["rectified"] = json{{"k_rect", rig.rectified->k_rect},
                              {"left_to_rect", rig.rectified->left_to_rect},
                              {"right_to_rect", rig.rectified->right_to_rect},
                              {"focal_px", rig.rectified->focal}};
    } else {
        j["rectified"] = nullptr;
    }
}

StereoRig rig_from_json(const json& j) {
    StereoRig rig;
    rig.left = j.at("left").get<CameraIntrinsics>();
    rig.right = j.at("right").get<CameraIntrinsics>();
    rig.left_to_right = transform_from_json(j.at("left_to_right"));
    if (rig.left_to_right.from() != FrameId::L_CAM || rig.left_to_right.to() != FrameId::R_CAM) {
        throw FrameMismatch("rig extrinsics must map L_CAM to R_CAM");
    }
    if (j.contains("rectified") && !j.at("rectified").is_null()) {
        const auto& r = j.at("rectified");
        rig.rectified = RectifiedGeometry{r.at("k_rect").get<CameraIntrinsics>(),
                                          transform_from_json(r.at("left_to_rect")),
                                          transform_from_json(r.at("right_to_rect")),
                                          r.at("focal_px").get<double>()};
        if (!(rig.rectified->focal > 0.0)) throw InvalidArgument("rectified focal length must be positive");
    }
    return rig;
}

json graph_to_json(const FrameGraph& g) {
    json arr = json::array();
    for (const auto& e : g.edges()) arr.push_back(e);
    return arr;
}

FrameGraph graph_from_json(const json& j) {
    FrameGraph g;
    for (const auto& e : j) g.set(transform_from_json(e));
    return g;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError(path.string() + " at byte offset " + std::to_string(e.byte) + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace arsafe::geom
