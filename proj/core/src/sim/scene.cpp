#include "arsafe/sim/scene.hpp"

#include "arsafe/geom/json.hpp"
#include "arsafe/geom/rasterize.hpp"
#include "arsafe/recon/reconstruct.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <numbers>

namespace arsafe::sim {

using nlohmann::json;

void SceneConfig::validate() const {
    vessel.validate();
    if (!(nodes.radius > 0.0) || nodes.slices < 3 || nodes.stacks < 2) throw InvalidArgument("invalid node spec");
    if (backdrop.enabled && !(backdrop.half_x > 0.0 && backdrop.half_y > 0.0)) {
        throw InvalidArgument("backdrop extent must be positive");
    }
    if (!rig.rectified) throw InvalidArgument("scene rig must be rectified");
    if (ecm_to_cam.from() != FrameId::ECM || ecm_to_cam.to() != FrameId::L_CAM) {
        throw FrameMismatch("scene camera mount must map ECM to L_CAM");
    }
    if (!(light_dir.norm() > 0.0)) throw InvalidArgument("light direction must be nonzero");
    if (!(ambient >= 0.0 && ambient <= 1.0)) throw InvalidArgument("ambient must be in [0,1]");
    if (!(near_plane > 0.0)) throw InvalidArgument("near plane must be positive");
}

SceneConfig default_scene() {
    SceneConfig s;
    s.vessel.control_points = {{-0.045, -0.003, 0.0955}, {-0.016, 0.003, 0.0955}, {0.012, -0.003, 0.0955},
                               {0.045, 0.002, 0.0955}};
    VesselSpec branch;
    branch.control_points = {{0.004, -0.002, 0.0975}, {0.0, -0.012, 0.0975}, {-0.004, -0.026, 0.0975}};
    branch.radius = 0.003;
    branch.radial_segments = 16;
    branch.axial_segments = 24;
    s.vessel.branches.push_back(branch);
    const double z = 0.101 - s.nodes.radius;
    for (double x : {-0.034, -0.024, -0.014}) {
        for (double y : {0.014, -0.014}) s.nodes.centers.emplace_back(x, y, z);
    }
    for (double x : {0.018, 0.032}) {
        for (double y : {0.014, -0.014}) s.nodes.centers.emplace_back(x, y, z);
    }
    s.rig = geom::make_rectified_rig(geom::make_intrinsics(700.0, 700.0, 319.5, 179.5, 640, 360), 0.004);
    const Mat3 r = (Eigen::AngleAxisd(0.04, Vec3::UnitX()) * Eigen::AngleAxisd(-0.03, Vec3::UnitY())).toRotationMatrix();
    s.ecm_to_cam = RigidTransform(r, Vec3(0.002, -0.001, 0.004), FrameId::ECM, FrameId::L_CAM);
    return s;
}

TriangleMesh instrument_mesh(const proximity::InstrumentModel& m, int radial_segments) {
    m.validate();
    VesselSpec spec;
    spec.control_points = {m.rcm, m.ee};
    spec.radius = m.radius;
    spec.radial_segments = radial_segments;
    spec.axial_segments = 1;
    return build_vessel_mesh(spec, m.frame);
}

TriangleMesh sphere_mesh(const Vec3& center, double radius, int slices, int stacks, FrameId frame) {
    TriangleMesh m(frame);
    const auto n = static_cast<std::uint32_t>(slices);
    m.vertices.push_back(center + Vec3(0, 0, radius));
    for (int i = 1; i < stacks; ++i) {
        const double theta = std::numbers::pi * i / stacks;
        for (int k = 0; k < slices; ++k) {
            const double phi = 2.0 * std::numbers::pi * k / slices;
            m.vertices.push_back(center + radius * Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                                        std::cos(theta)));
        }
    }
    m.vertices.push_back(center - Vec3(0, 0, radius));
    const auto bottom = static_cast<std::uint32_t>(m.vertices.size() - 1);
    auto ring = [n](int i, std::uint32_t k) { return 1 + static_cast<std::uint32_t>(i) * n + (k % n); };
    for (std::uint32_t k = 0; k < n; ++k) m.triangles.push_back({0, ring(0, k), ring(0, k + 1)});
    for (int i = 0; i + 1 < stacks - 1; ++i) {
        for (std::uint32_t k = 0; k < n; ++k) {
            m.triangles.push_back({ring(i, k), ring(i + 1, k), ring(i + 1, k + 1)});
            m.triangles.push_back({ring(i, k), ring(i + 1, k + 1), ring(i, k + 1)});
        }
    }
    for (std::uint32_t k = 0; k < n; ++k) m.triangles.push_back({bottom, ring(stacks - 2, k + 1), ring(stacks - 2, k)});
    return m;
}

SceneMeshes scene_meshes(const SceneConfig& scene, const SceneState& state) {
    SceneMeshes out;
    out.meshes.push_back(build_vessel_mesh(scene.vessel, FrameId::ECM));
    out.kinds.push_back(Surface::Vessel);
    if (!state.node_present.empty() && state.node_present.size() != scene.nodes.centers.size()) {
        throw InvalidArgument("node presence flags do not match the node count");
    }
    for (std::size_t i = 0; i < scene.nodes.centers.size(); ++i) {
        if (!state.node_present.empty() && !state.node_present[i]) continue;
        out.meshes.push_back(
            sphere_mesh(scene.nodes.centers[i], scene.nodes.radius, scene.nodes.slices, scene.nodes.stacks));
        out.kinds.push_back(Surface::Node);
    }
    if (scene.backdrop.enabled) {
        const auto& b = scene.backdrop;
        TriangleMesh m(FrameId::ECM);
        m.vertices = {{-b.half_x, -b.half_y, b.depth}, {b.half_x, -b.half_y, b.depth}, {b.half_x, b.half_y, b.depth},
                      {-b.half_x, b.half_y, b.depth}};
        m.triangles = {{0, 2, 1}, {0, 3, 2}};
        out.meshes.push_back(std::move(m));
        out.kinds.push_back(Surface::Backdrop);
    }
    for (const auto& inst : state.instruments) {
        if (inst.frame != FrameId::ECM) throw FrameMismatch("instruments must be given in ECM");
        out.meshes.push_back(instrument_mesh(inst));
        out.kinds.push_back(Surface::Instrument);
    }
    return out;
}

RigidTransform ecm_to_rect_left(const SceneConfig& scene) {
    return geom::compose(scene.ecm_to_cam, scene.rig.rect().left_to_rect);
}

RigidTransform ecm_to_rect_right(const SceneConfig& scene) {
    return geom::compose(geom::compose(scene.ecm_to_cam, scene.rig.left_to_right), scene.rig.rect().right_to_rect);
}

namespace {

double albedo(Surface s) {
    switch (s) {
        case Surface::Backdrop: return 0.6;
        case Surface::Vessel: return 0.9;
        case Surface::Node: return 0.75;
        case Surface::Instrument: return 0.4;
        case Surface::None: break;
    }
    return 0.0;
}

struct Buffers {
    geom::Raster<double> depth;
    geom::Raster<std::uint8_t> labels;
    geom::GrayImage shade;
};

Buffers rasterize_scene(const SceneConfig& scene, const SceneMeshes& meshes, const RigidTransform& to_cam) {
    const auto& k = scene.rig.rect().k_rect;
    Buffers b{geom::Raster<double>(k.width, k.height, geom::kInvalid),
              geom::Raster<std::uint8_t>(k.width, k.height, 0), geom::GrayImage(k.width, k.height, 0)};
    const Vec3 light = scene.light_dir.normalized();
    std::vector<Vec3> cam;
    std::vector<Vec2> px;
    for (std::size_t mi = 0; mi < meshes.meshes.size(); ++mi) {
        const auto& mesh = meshes.meshes[mi];
        const Surface kind = meshes.kinds[mi];
        cam.resize(mesh.vertices.size());
        px.resize(mesh.vertices.size());
        for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
            cam[i] = to_cam.apply(mesh.vertices[i]);
            px[i] = Vec2(k.fx * cam[i].x() / cam[i].z() + k.cx, k.fy * cam[i].y() / cam[i].z() + k.cy);
        }
        for (const auto& tri : mesh.triangles) {
            const Vec3 &a = cam[tri[0]], &bb = cam[tri[1]], &c = cam[tri[2]];
            if (a.z() < scene.near_plane || bb.z() < scene.near_plane || c.z() < scene.near_plane) continue;
            const Vec3 n = (bb - a).cross(c - a);
            const double len = n.norm();
            if (!(len > 0.0)) continue;
            const double lambert = std::max(0.0, -n.dot(light) / len);
            const double value = albedo(kind) * (scene.ambient + (1.0 - scene.ambient) * lambert);
            const auto gray = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(value, 0.0, 1.0)));
            const bool flat = a.z() == bb.z() && bb.z() == c.z();
            const double ia = 1.0 / a.z(), ib = 1.0 / bb.z(), ic = 1.0 / c.z();
            geom::rasterize_triangle(px[tri[0]], px[tri[1]], px[tri[2]], k.width, k.height,
                                     [&](int u, int v, double l0, double l1, double l2) {
                                         const double z = flat ? a.z() : 1.0 / (l0 * ia + l1 * ib + l2 * ic);
                                         double& d = b.depth(u, v);
                                         if (std::isnan(d) || z < d) {
                                             d = z;
                                             b.labels(u, v) = static_cast<std::uint8_t>(kind);
                                             b.shade(u, v) = gray;
                                         }
                                     });
        }
    }
    return b;
}

}  // namespace

RenderedViews render_views(const SceneConfig& scene, const SceneState& state) {
    scene.validate();
    const auto meshes = scene_meshes(scene, state);
    auto left = rasterize_scene(scene, meshes, ecm_to_rect_left(scene));
    auto right = rasterize_scene(scene, meshes, ecm_to_rect_right(scene));
    RenderedViews out;
    out.rgb_l = geom::to_rgb(left.shade);
    out.rgb_r = geom::to_rgb(right.shade);
    out.disp_gt = recon::depth_to_disparity(left.depth, scene.rig.baseline(), scene.rig.rect().focal);
    out.mask_gt = BinaryMask(left.labels.width(), left.labels.height(), geom::kMaskOff);
    for (std::size_t i = 0; i < left.labels.size(); ++i) {
        if (left.labels.values()[i] == static_cast<std::uint8_t>(Surface::Vessel)) out.mask_gt.values()[i] = geom::kMaskOn;
    }
    out.depth_gt = std::move(left.depth);
    out.labels = std::move(left.labels);
    return out;
}

TriangleMesh preop_vessel(const SceneConfig& scene, const RigidTransform& bl_to_ecm) {
    if (bl_to_ecm.from() != FrameId::BL || bl_to_ecm.to() != FrameId::ECM) {
        throw FrameMismatch("pre-operative pose must map BL to ECM");
    }
    return geom::transform_mesh(bl_to_ecm.inverse(), build_vessel_mesh(scene.vessel, FrameId::ECM));
}

void to_json(json& j, const VesselSpec& v) {
    j = json{{"control_points_m", geom::points_to_json(v.control_points)},
             {"radius_m", v.radius},
             {"radial_segments", v.radial_segments},
             {"axial_segments", v.axial_segments},
             {"branches", json::array()}};
    for (const auto& b : v.branches) j["branches"].push_back(json(b));
}

VesselSpec vessel_from_json(const json& j) {
    VesselSpec v;
    v.control_points = geom::points_from_json(j.at("control_points_m"));
    v.radius = j.value("radius_m", v.radius);
    v.radial_segments = j.value("radial_segments", v.radial_segments);
    v.axial_segments = j.value("axial_segments", v.axial_segments);
    if (j.contains("branches")) {
        for (const auto& b : j.at("branches")) v.branches.push_back(vessel_from_json(b));
    }
    return v;
}

void to_json(json& j, const SceneConfig& s) {
    j = json{{"vessel", json(s.vessel)},
             {"nodes", {{"centers_m", geom::points_to_json(s.nodes.centers)},
                        {"radius_m", s.nodes.radius},
                        {"slices", s.nodes.slices},
                        {"stacks", s.nodes.stacks}}},
             {"backdrop", {{"enabled", s.backdrop.enabled},
                           {"depth_m", s.backdrop.depth},
                           {"half_x_m", s.backdrop.half_x},
                           {"half_y_m", s.backdrop.half_y}}},
             {"rig", json(s.rig)},
             {"ecm_to_cam", json(s.ecm_to_cam)},
             {"light_dir", geom::vec_to_json(s.light_dir)},
             {"ambient", s.ambient},
             {"near_plane_m", s.near_plane}};
}

SceneConfig scene_from_json(const json& j) {
    SceneConfig s = default_scene();
    try {
        if (j.contains("vessel")) s.vessel = vessel_from_json(j.at("vessel"));
        if (j.contains("nodes")) {
            const auto& n = j.at("nodes");
            if (n.contains("centers_m")) s.nodes.centers = geom::points_from_json(n.at("centers_m"));
            s.nodes.radius = n.value("radius_m", s.nodes.radius);
            s.nodes.slices = n.value("slices", s.nodes.slices);
            s.nodes.stacks = n.value("stacks", s.nodes.stacks);
        }
        if (j.contains("backdrop")) {
            const auto& b = j.at("backdrop");
            s.backdrop.enabled = b.value("enabled", s.backdrop.enabled);
            s.backdrop.depth = b.value("depth_m", s.backdrop.depth);
            s.backdrop.half_x = b.value("half_x_m", s.backdrop.half_x);
            s.backdrop.half_y = b.value("half_y_m", s.backdrop.half_y);
        }
        if (j.contains("rig")) s.rig = geom::rig_from_json(j.at("rig"));
        if (j.contains("ecm_to_cam")) s.ecm_to_cam = geom::transform_from_json(j.at("ecm_to_cam"));
        if (j.contains("light_dir")) s.light_dir = geom::vec_from_json(j.at("light_dir"));
        s.ambient = j.value("ambient", s.ambient);
        s.near_plane = j.value("near_plane_m", s.near_plane);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed scene config: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace arsafe::sim
