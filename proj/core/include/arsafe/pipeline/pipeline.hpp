#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/camera.hpp"
#include "arsafe/geom/cloud.hpp"
#include "arsafe/overlay/overlay.hpp"
#include "arsafe/pipeline/session_log.hpp"
#include "arsafe/pipeline/timing.hpp"
#include "arsafe/proximity/proximity.hpp"
#include "arsafe/recon/mask.hpp"
#include "arsafe/recon/providers.hpp"
#include "arsafe/registration/align.hpp"
#include "arsafe/sim/noise.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace arsafe::pipeline {

using geom::FrameGraph;
using geom::FrameId;
using geom::RgbImage;
using geom::RigidTransform;

enum class ProviderKind { GroundTruth, Noisy, Files };
std::string to_string(ProviderKind k);
ProviderKind provider_from_string(const std::string& s);

struct PipelineConfig {
    ProviderKind provider = ProviderKind::GroundTruth;
    std::filesystem::path dataset;      // Files provider root
    std::filesystem::path calibration;  // optional calibration JSON
    std::filesystem::path scene;        // optional scene JSON
    sim::NoiseSpec noise;
    registration::RegistrationParams registration;
    recon::PostProcessParams post;
    overlay::OverlayStyle style;
    proximity::SamplingParams sampling;
    int width = 640;
    int height = 360;
    int port = 8765;
    std::uint64_t seed = 0;
    std::size_t preop_samples = 200000;  // dense pre-operative cloud used as the ICP target
    Modality modality = Modality::Experiment;
    double tick_hz = 30.0;

    /// Positive sizes and rates; referenced files must exist.
    void validate() const;
};

nlohmann::json to_json(const PipelineConfig& c);
/// Missing keys keep their defaults. Throws InvalidArgument on malformed values.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

std::unique_ptr<recon::DepthProvider> make_depth_provider(const PipelineConfig& c);
std::unique_ptr<recon::MaskProvider> make_mask_provider(const PipelineConfig& c);

/// Rectified rig plus the transforms the pipeline needs: ECM->L_CAM, L_CAM->R_CAM,
/// L_CAM->Rec_L_CAM, R_CAM->Rec_R_CAM, EE1->EE2 and EE2->ECM.
struct Calibration {
    geom::StereoRig rig;
    FrameGraph graph;

    void validate() const;
};

Calibration make_calibration(const geom::StereoRig& rig, const RigidTransform& ecm_to_cam,
                             const RigidTransform& ee1_to_ee2, const RigidTransform& ee2_to_ecm);
nlohmann::json to_json(const Calibration& c);
Calibration calibration_from_json(const nlohmann::json& j);

/// Instrument kinematics for one frame: left arm (PSM2) in ECM or EE2, right arm (PSM1) in
/// EE1, EE2 or ECM.
struct ArmInputs {
    proximity::InstrumentModel left;
    proximity::InstrumentModel right;
};

struct FrameInput {
    recon::StereoFrame stereo;
    ArmInputs arms;
};

struct FrameResult {
    std::size_t m = 0;
    RgbImage left;
    RgbImage right;
    std::optional<proximity::ProximityReport> proximity;
    proximity::GaugeState gauges;
    std::optional<registration::RegistrationResult> icp;
    TimingBreakdown timing;
    std::vector<std::string> events;
    std::size_t cloud_points = 0;
    proximity::InstrumentModel left_arm;   // ECM
    proximity::InstrumentModel right_arm;  // ECM
    bool skipped = false;
};

/// The per-frame flow: preprocessing, disparity, mask and post-processing, masked cloud in
/// ECM, distances, ICP refresh (global registration once, on the first usable frame), overlay
/// and gauges on both rectified views.
class Pipeline {
public:
    Pipeline(PipelineConfig config, Calibration calibration, geom::TriangleMesh preop,
             std::unique_ptr<recon::DepthProvider> depth, std::unique_ptr<recon::MaskProvider> mask);

    FrameResult process_frame(const FrameInput& input);

    bool registered() const { return registration_.has_value(); }
    const RigidTransform& registration() const;
    /// Skips global registration; ICP still refines every frame.
    void set_registration(const RigidTransform& bl_to_ecm);

    std::size_t global_registrations() const { return global_count_; }
    std::size_t icp_runs() const { return icp_count_; }
    std::size_t frames_processed() const { return frames_; }

    const FrameGraph& graph() const { return graph_; }
    const geom::StereoRig& rig() const { return rig_; }
    const geom::TriangleMesh& preop() const { return preop_; }
    const geom::PointCloud& preop_cloud() const { return preop_cloud_; }
    const geom::PointCloud& last_cloud() const { return last_cloud_; }
    const PipelineConfig& config() const { return config_; }

private:
    proximity::InstrumentModel to_ecm(const proximity::InstrumentModel& m) const;

    PipelineConfig config_;
    geom::StereoRig rig_;
    FrameGraph graph_;
    geom::TriangleMesh preop_;
    geom::PointCloud preop_cloud_;
    std::unique_ptr<geom::KdTree> preop_tree_;
    std::unique_ptr<recon::DepthProvider> depth_;
    std::unique_ptr<recon::MaskProvider> mask_;
    std::optional<RigidTransform> registration_;
    proximity::GaugeState last_gauges_;
    geom::PointCloud last_cloud_;
    std::size_t global_count_ = 0;
    std::size_t icp_count_ = 0;
    std::size_t frames_ = 0;
};

}  // namespace arsafe::pipeline
