#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/raster.hpp"
#include "arsafe/sim/scene.hpp"
#include "arsafe/sim/script.hpp"

#include <filesystem>
#include <vector>

namespace arsafe::sim {

/// One frame directory: left.pgm, right.pgm, disp_gt.pfm, depth_gt.pfm, mask_gt.pgm, rig.json.
/// Float rasters hold float32-representable values so files reproduce them exactly.
struct DatasetFrame {
    std::size_t index = 0;
    double t = 0.0;  // s
    geom::GrayImage left;
    geom::GrayImage right;
    DisparityMap disp_gt;
    DepthMap depth_gt;
    BinaryMask mask_gt;
    StereoRig rig;
    RigidTransform ecm_to_cam{FrameId::ECM, FrameId::L_CAM};
    SceneState state;
};

inline constexpr const char* kDatasetFiles[] = {"left.pgm",    "right.pgm",   "disp_gt.pfm",
                                                "depth_gt.pfm", "mask_gt.pgm", "rig.json"};

/// Renders `n_frames` frames at t = script.start() + i * dt (clamped to the span).
std::vector<DatasetFrame> render_dataset(const SceneConfig& scene, const TrajectoryScript& script, std::size_t n_frames,
                                         double dt = 1.0 / 30.0);

void write_frame(const std::filesystem::path& root, const DatasetFrame& frame);
DatasetFrame read_frame(const std::filesystem::path& root, std::size_t index);

/// render_dataset + write_frame for each frame, plus dataset.json (scene, script, count) at the root.
std::vector<DatasetFrame> export_dataset(const SceneConfig& scene, const TrajectoryScript& script, std::size_t n_frames,
                                         const std::filesystem::path& dir, double dt = 1.0 / 30.0);
/// Frames 0000, 0001, ... until the first missing directory.
std::vector<DatasetFrame> import_dataset(const std::filesystem::path& dir);

}  // namespace arsafe::sim
