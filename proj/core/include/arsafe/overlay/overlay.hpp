#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/camera.hpp"
#include "arsafe/geom/cloud.hpp"
#include "arsafe/geom/raster.hpp"
#include "arsafe/proximity/proximity.hpp"

#include <optional>
#include <vector>

namespace arsafe::overlay {

using geom::CameraIntrinsics;
using geom::FrameGraph;
using geom::FrameId;
using geom::RgbImage;
using geom::Rgb8;
using geom::Triangle;
using geom::Vec2;
using geom::Vec3;

/// Model vertices projected into one image; entries are parallel to the input points.
/// `triangles` index those entries (empty for point models).
struct Primitives {
    std::vector<Vec2> pixels;
    std::vector<double> depth;          // z in the camera frame, m
    std::vector<std::uint8_t> visible;  // 0 when z <= 0 (culled)
    std::vector<Triangle> triangles;
    /// Optional colour per triangle (filled mode) or per point (splat mode).
    std::vector<Rgb8> colors;

    std::size_t size() const { return pixels.size(); }
};

/// Projection of points given in `chain.from()` through `chain` and `k` (with distortion).
Primitives project_points(const std::vector<Vec3>& points, const geom::RigidTransform& chain, const CameraIntrinsics& k);

/// K_L . T_ECM^L_CAM . T_BL^ECM applied to a BL model.
Primitives project_model_left(const geom::PointCloud& model, const FrameGraph& graph, const CameraIntrinsics& k_l);
Primitives project_model_left(const geom::TriangleMesh& model, const FrameGraph& graph, const CameraIntrinsics& k_l);
/// K_R . T_L_CAM^R_CAM . T_ECM^L_CAM . T_BL^ECM.
Primitives project_model_right(const geom::PointCloud& model, const FrameGraph& graph, const CameraIntrinsics& k_r);
Primitives project_model_right(const geom::TriangleMesh& model, const FrameGraph& graph, const CameraIntrinsics& k_r);

/// Projection into a rectified view of `rig`: the left chain continues with L_CAM -> Rec_L_CAM,
/// the right one with L_CAM -> R_CAM -> Rec_R_CAM, both through k_rect.
Primitives project_model_rectified(const geom::TriangleMesh& model, const FrameGraph& graph, const geom::StereoRig& rig,
                                   geom::StereoSide side);
Primitives project_model_rectified(const geom::PointCloud& model, const FrameGraph& graph, const geom::StereoRig& rig,
                                   geom::StereoSide side);

enum class OverlayMode { Filled, Splat };

struct GaugeStyle {
    int radius = 40;  // px, outer radius of the half ring
    int thickness = 10;
    int margin = 12;
    int text_scale = 2;
    Rgb8 track{70, 70, 70};
    Rgb8 tick{255, 255, 255};
    Rgb8 text{255, 255, 255};
};

struct OverlayStyle {
    OverlayMode mode = OverlayMode::Filled;
    int splat_radius = 1;  // px
    double opacity = 0.6;
    GaugeStyle gauge;

    void validate() const;
};

/// Z-buffered primitives alpha-blended over `frame`; pixels not covered keep their bytes.
RgbImage render_overlay(const RgbImage& frame, const Primitives& prims, Rgb8 color, const OverlayStyle& style);

/// Coverage mask of render_overlay (same rasterization, no blending).
geom::BinaryMask overlay_coverage(int width, int height, const Primitives& prims, const OverlayStyle& style);

/// Two half-ring gauges, left-upper for the left arm and right-upper for the right arm.
/// The filled arc spans gauge/0.06 of the ring in the arm's band colour, with ticks at 0, 3 and
/// 6 cm and a readout in cm with one decimal below each gauge.
RgbImage render_gauges(const RgbImage& frame, const proximity::GaugeState& state, const OverlayStyle& style);

/// Pixel rectangle a gauge (with its readout) may touch, for locality checks.
struct Box {
    int u0, v0, u1, v1;  // inclusive
    bool contains(int u, int v) const { return u >= u0 && u <= u1 && v >= v0 && v <= v1; }
};
Box gauge_box(int width, const GaugeStyle& style, bool left);

}  // namespace arsafe::overlay
