#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/camera.hpp"
#include "arsafe/geom/cloud.hpp"
#include "arsafe/geom/raster.hpp"
#include "arsafe/proximity/proximity.hpp"
#include "arsafe/sim/vessel.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace arsafe::sim {

using geom::BinaryMask;
using geom::DepthMap;
using geom::DisparityMap;
using geom::RgbImage;
using geom::RigidTransform;
using geom::StereoRig;
using geom::Mat3;
using geom::Vec2;

/// Surface classes written into the label buffer.
enum class Surface : std::uint8_t { None = 0, Backdrop = 1, Vessel = 2, Node = 3, Instrument = 4 };

struct NodeSpec {
    std::vector<Vec3> centers;  // m, ECM
    double radius = 0.003;      // m
    int slices = 16;
    int stacks = 10;
};

/// Flat tissue bed behind the vessel: rectangle on the plane z = depth (ECM), spanning
/// [-half_x, half_x] x [-half_y, half_y].
struct BackdropSpec {
    bool enabled = true;
    double depth = 0.101;
    double half_x = 0.08;
    double half_y = 0.05;
};

/// Everything is modelled in ECM; `ecm_to_cam` places the left camera (the hand-eye
/// transform), and the rig must be rectified.
struct SceneConfig {
    VesselSpec vessel;
    NodeSpec nodes;
    BackdropSpec backdrop;
    StereoRig rig;
    RigidTransform ecm_to_cam{FrameId::ECM, FrameId::L_CAM};
    Vec3 light_dir{0.0, 0.0, 1.0};  // direction the light travels, camera frame
    double ambient = 0.25;
    double near_plane = 0.005;  // m; triangles with a vertex closer are dropped

    void validate() const;
};

/// 640x360, f = 700 px, 4 mm baseline, ten nodes around a branching vessel at ~10 cm.
SceneConfig default_scene();

/// What changes between frames.
struct SceneState {
    std::vector<proximity::InstrumentModel> instruments;  // ECM
    std::vector<std::uint8_t> node_present;               // empty means all present
};

struct RenderedViews {
    RgbImage rgb_l;
    RgbImage rgb_r;
    DepthMap depth_gt;     // z in Rec_L_CAM, NaN where nothing was hit
    DisparityMap disp_gt;  // b f / z
    BinaryMask mask_gt;    // front-most surface is the vessel
    geom::Raster<std::uint8_t> labels;
};

/// Scene meshes in ECM: vessel, nodes (present ones), backdrop, instruments.
struct SceneMeshes {
    std::vector<TriangleMesh> meshes;
    std::vector<Surface> kinds;
};
SceneMeshes scene_meshes(const SceneConfig& scene, const SceneState& state);

/// Shaft of an instrument as a closed cylinder (RCM to EE), ECM.
TriangleMesh instrument_mesh(const proximity::InstrumentModel& m, int radial_segments = 16);
/// Latitude-longitude sphere.
TriangleMesh sphere_mesh(const Vec3& center, double radius, int slices, int stacks, FrameId frame = FrameId::ECM);

/// Rigid transforms ECM -> Rec_L_CAM and ECM -> Rec_R_CAM implied by the scene.
RigidTransform ecm_to_rect_left(const SceneConfig& scene);
RigidTransform ecm_to_rect_right(const SceneConfig& scene);

RenderedViews render_views(const SceneConfig& scene, const SceneState& state);

/// Vessel surface in BL as the pre-operative model, given the planted BL -> ECM pose.
TriangleMesh preop_vessel(const SceneConfig& scene, const RigidTransform& bl_to_ecm);

void to_json(nlohmann::json& j, const SceneConfig& s);
SceneConfig scene_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const VesselSpec& v);
VesselSpec vessel_from_json(const nlohmann::json& j);

}  // namespace arsafe::sim
