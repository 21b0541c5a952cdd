#include "arsafe/pipeline/pipeline.hpp"

#include "arsafe/geom/json.hpp"
#include "arsafe/geom/resample.hpp"
#include "arsafe/recon/reconstruct.hpp"
#include "arsafe/registration/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace arsafe::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(ProviderKind k) {
    switch (k) {
        case ProviderKind::GroundTruth: return "ground-truth";
        case ProviderKind::Noisy: return "noisy";
        case ProviderKind::Files: return "files";
    }
    return "ground-truth";
}

ProviderKind provider_from_string(const std::string& s) {
    if (s == "ground-truth") return ProviderKind::GroundTruth;
    if (s == "noisy") return ProviderKind::Noisy;
    if (s == "files") return ProviderKind::Files;
    throw InvalidArgument("unknown provider '" + s + "' (expected ground-truth, noisy or files)");
}

void PipelineConfig::validate() const {
    if (width <= 0 || height <= 0) throw InvalidArgument("pipeline resolution must be positive");
    if (port <= 0 || port > 65535) throw InvalidArgument("service port must be in 1..65535");
    if (!(tick_hz > 0.0)) throw InvalidArgument("tick rate must be positive");
    if (preop_samples < 100) throw InvalidArgument("pre-operative sample count must be at least 100");
    registration.validate();
    style.validate();
    noise.validate();
    if (!(sampling.axial_step > 0.0) || sampling.ring_count < 3) throw InvalidArgument("invalid instrument sampling");
    if (provider == ProviderKind::Files && !fs::is_directory(dataset)) {
        throw InvalidArgument("dataset directory '" + dataset.string() + "' does not exist");
    }
    if (!calibration.empty() && !fs::exists(calibration)) {
        throw InvalidArgument("calibration file '" + calibration.string() + "' does not exist");
    }
    if (!scene.empty() && !fs::exists(scene)) throw InvalidArgument("scene file '" + scene.string() + "' does not exist");
}

json to_json(const PipelineConfig& c) {
    const auto& r = c.registration;
    return {{"provider", to_string(c.provider)},
            {"dataset", c.dataset.string()},
            {"calibration", c.calibration.string()},
            {"scene", c.scene.string()},
            {"noise", json(c.noise)},
            {"registration",
             {{"voxel_m", r.voxel},
              {"ransac",
               {{"max_iterations", r.ransac.max_iterations},
                {"confidence", r.ransac.confidence},
                {"voxel_m", r.ransac.voxel},
                {"normal_neighbors", r.ransac.normal_neighbors},
                {"descriptor_radius_m", r.ransac.descriptor_radius},
                {"max_corr_dist_m", r.ransac.max_corr_dist},
                {"edge_length_ratio", r.ransac.edge_length_ratio},
                {"max_normal_angle_rad", r.ransac.max_normal_angle},
                {"min_inliers", r.ransac.min_inliers},
                {"candidates", r.ransac.candidates},
                {"seed", r.ransac.seed}}},
              {"icp",
               {{"max_iterations", r.icp.max_iterations},
                {"corr_dist_m", r.icp.corr_dist},
                {"convergence_eps_m", r.icp.convergence_eps},
                {"max_point_count", r.icp.max_point_count}}}}},
            {"post", {{"erosion_radius_px", c.post.erosion_radius}, {"min_area_px", c.post.min_area}}},
            {"overlay",
             {{"mode", c.style.mode == overlay::OverlayMode::Filled ? "filled" : "splat"},
              {"splat_radius_px", c.style.splat_radius},
              {"opacity", c.style.opacity}}},
            {"sampling", {{"axial_step_m", c.sampling.axial_step}, {"ring_count", c.sampling.ring_count}}},
            {"width", c.width},
            {"height", c.height},
            {"port", c.port},
            {"seed", c.seed},
            {"preop_samples", c.preop_samples},
            {"modality", to_string(c.modality)},
            {"tick_hz", c.tick_hz}};
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    try {
        if (j.contains("provider")) c.provider = provider_from_string(j.at("provider").get<std::string>());
        c.dataset = j.value("dataset", std::string{});
        c.calibration = j.value("calibration", std::string{});
        c.scene = j.value("scene", std::string{});
        if (j.contains("noise")) c.noise = sim::noise_from_json(j.at("noise"));
        if (j.contains("registration")) {
            const auto& r = j.at("registration");
            auto& p = c.registration;
            p.voxel = r.value("voxel_m", p.voxel);
            if (r.contains("ransac")) {
                const auto& s = r.at("ransac");
                p.ransac.max_iterations = s.value("max_iterations", p.ransac.max_iterations);
                p.ransac.confidence = s.value("confidence", p.ransac.confidence);
                p.ransac.voxel = s.value("voxel_m", p.ransac.voxel);
                p.ransac.normal_neighbors = s.value("normal_neighbors", p.ransac.normal_neighbors);
                p.ransac.descriptor_radius = s.value("descriptor_radius_m", p.ransac.descriptor_radius);
                p.ransac.max_corr_dist = s.value("max_corr_dist_m", p.ransac.max_corr_dist);
                p.ransac.edge_length_ratio = s.value("edge_length_ratio", p.ransac.edge_length_ratio);
                p.ransac.max_normal_angle = s.value("max_normal_angle_rad", p.ransac.max_normal_angle);
                p.ransac.min_inliers = s.value("min_inliers", p.ransac.min_inliers);
                p.ransac.candidates = s.value("candidates", p.ransac.candidates);
                p.ransac.seed = s.value("seed", p.ransac.seed);
            }
            if (r.contains("icp")) {
                const auto& s = r.at("icp");
                p.icp.max_iterations = s.value("max_iterations", p.icp.max_iterations);
                p.icp.corr_dist = s.value("corr_dist_m", p.icp.corr_dist);
                p.icp.convergence_eps = s.value("convergence_eps_m", p.icp.convergence_eps);
                p.icp.max_point_count = s.value("max_point_count", p.icp.max_point_count);
            }
        }
        if (j.contains("post")) {
            c.post.erosion_radius = j.at("post").value("erosion_radius_px", c.post.erosion_radius);
            c.post.min_area = j.at("post").value("min_area_px", c.post.min_area);
        }
        if (j.contains("overlay")) {
            const auto& o = j.at("overlay");
            const auto mode = o.value("mode", std::string("filled"));
            if (mode != "filled" && mode != "splat") throw InvalidArgument("overlay mode must be filled or splat");
            c.style.mode = mode == "filled" ? overlay::OverlayMode::Filled : overlay::OverlayMode::Splat;
            c.style.splat_radius = o.value("splat_radius_px", c.style.splat_radius);
            c.style.opacity = o.value("opacity", c.style.opacity);
        }
        if (j.contains("sampling")) {
            c.sampling.axial_step = j.at("sampling").value("axial_step_m", c.sampling.axial_step);
            c.sampling.ring_count = j.at("sampling").value("ring_count", c.sampling.ring_count);
        }
        c.width = j.value("width", c.width);
        c.height = j.value("height", c.height);
        c.port = j.value("port", c.port);
        c.seed = j.value("seed", c.seed);
        c.preop_samples = j.value("preop_samples", c.preop_samples);
        if (j.contains("modality")) c.modality = modality_from_string(j.at("modality").get<std::string>());
        c.tick_hz = j.value("tick_hz", c.tick_hz);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed pipeline config: ") + e.what());
    }
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    auto c = config_from_json(geom::read_json(path));
    const fs::path base = path.parent_path();
    for (fs::path* p : {&c.dataset, &c.calibration, &c.scene}) {
        if (!p->empty() && p->is_relative()) *p = base / *p;
    }
    return c;
}

std::unique_ptr<recon::DepthProvider> make_depth_provider(const PipelineConfig& c) {
    switch (c.provider) {
        case ProviderKind::GroundTruth: return std::make_unique<recon::GroundTruthDepthProvider>();
        case ProviderKind::Noisy: return std::make_unique<sim::NoisyDepthProvider>(c.noise, c.seed);
        case ProviderKind::Files: return std::make_unique<recon::FileDepthProvider>(c.dataset);
    }
    throw InvalidArgument("unknown provider");
}

std::unique_ptr<recon::MaskProvider> make_mask_provider(const PipelineConfig& c) {
    switch (c.provider) {
        case ProviderKind::GroundTruth: return std::make_unique<recon::GroundTruthMaskProvider>();
        case ProviderKind::Noisy: return std::make_unique<sim::NoisyMaskProvider>(c.noise, c.seed);
        case ProviderKind::Files: return std::make_unique<recon::FileMaskProvider>(c.dataset);
    }
    throw InvalidArgument("unknown provider");
}

void Calibration::validate() const {
    if (!rig.rectified) throw InvalidArgument("calibration rig must be rectified");
    for (auto [from, to] : {std::pair{FrameId::ECM, FrameId::L_CAM}, std::pair{FrameId::L_CAM, FrameId::R_CAM},
                            std::pair{FrameId::L_CAM, FrameId::Rec_L_CAM}, std::pair{FrameId::R_CAM, FrameId::Rec_R_CAM},
                            std::pair{FrameId::EE1, FrameId::EE2}, std::pair{FrameId::EE2, FrameId::ECM}}) {
        if (!graph.has(from, to)) {
            throw MissingTransform("calibration lacks " + std::string(geom::to_string(from)) + " -> " +
                                   std::string(geom::to_string(to)));
        }
    }
}

Calibration make_calibration(const geom::StereoRig& rig, const RigidTransform& ecm_to_cam,
                             const RigidTransform& ee1_to_ee2, const RigidTransform& ee2_to_ecm) {
    Calibration c;
    c.rig = rig;
    c.graph.set(ecm_to_cam);
    c.graph.set(rig.left_to_right);
    c.graph.set(rig.rect().left_to_rect);
    c.graph.set(rig.rect().right_to_rect);
    c.graph.set(ee1_to_ee2);
    c.graph.set(ee2_to_ecm);
    c.validate();
    return c;
}

json to_json(const Calibration& c) {
    return {{"rig", json(c.rig)}, {"transforms", geom::graph_to_json(c.graph)}};
}

Calibration calibration_from_json(const json& j) {
    Calibration c;
    try {
        c.rig = geom::rig_from_json(j.at("rig"));
        c.graph = geom::graph_from_json(j.at("transforms"));
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed calibration: ") + e.what());
    }
    if (c.rig.rectified) {
        if (!c.graph.has(FrameId::L_CAM, FrameId::R_CAM)) c.graph.set(c.rig.left_to_right);
        if (!c.graph.has(FrameId::L_CAM, FrameId::Rec_L_CAM)) c.graph.set(c.rig.rect().left_to_rect);
        if (!c.graph.has(FrameId::R_CAM, FrameId::Rec_R_CAM)) c.graph.set(c.rig.rect().right_to_rect);
    }
    c.validate();
    return c;
}

Pipeline::Pipeline(PipelineConfig config, Calibration calibration, geom::TriangleMesh preop,
                   std::unique_ptr<recon::DepthProvider> depth, std::unique_ptr<recon::MaskProvider> mask)
    : config_(std::move(config)),
      graph_((calibration.validate(), calibration.graph)),
      preop_(std::move(preop)),
      depth_(std::move(depth)),
      mask_(std::move(mask)) {
    config_.registration.validate();
    config_.style.validate();
    if (!depth_ || !mask_) throw InvalidArgument("pipeline needs depth and mask providers");
    if (preop_.frame != FrameId::BL) throw FrameMismatch("pre-operative model must be in BL");
    rig_ = calibration.rig;
    const auto& k = rig_.rect().k_rect;
    if (k.width != config_.width || k.height != config_.height) rig_ = geom::scale_rig(rig_, config_.width, config_.height);
    graph_.set(rig_.rect().left_to_rect);
    graph_.set(rig_.rect().right_to_rect);
    preop_cloud_ = registration::sample_mesh_points(preop_, config_.preop_samples, config_.seed);
    preop_tree_ = std::make_unique<geom::KdTree>(preop_cloud_.points);
}

const RigidTransform& Pipeline::registration() const {
    if (!registration_) throw InvalidArgument("pipeline is not registered yet");
    return *registration_;
}

void Pipeline::set_registration(const RigidTransform& bl_to_ecm) {
    if (bl_to_ecm.from() != FrameId::BL || bl_to_ecm.to() != FrameId::ECM) {
        throw FrameMismatch("registration must map BL to ECM");
    }
    registration_ = bl_to_ecm;
    graph_.set(bl_to_ecm);
}

proximity::InstrumentModel Pipeline::to_ecm(const proximity::InstrumentModel& m) const {
    proximity::InstrumentModel out = m;
    if (out.frame == FrameId::EE1) out = proximity::align_psm1(out, graph_.get(FrameId::EE1, FrameId::EE2));
    if (out.frame == FrameId::EE2) {
        const auto t = graph_.get(FrameId::EE2, FrameId::ECM);
        out.ee = t.apply(out.ee);
        out.rcm = t.apply(out.rcm);
        out.frame = FrameId::ECM;
    }
    if (out.frame != FrameId::ECM) {
        throw FrameMismatch("instrument given in " + std::string(geom::to_string(m.frame)) + " cannot be mapped to ECM");
    }
    return out;
}

FrameResult Pipeline::process_frame(const FrameInput& input) {
    const Stopwatch whole;
    FrameResult r;
    r.m = input.stereo.index;
    r.left_arm = to_ecm(input.arms.left);
    r.right_arm = to_ecm(input.arms.right);
    ++frames_;

    // Preprocessing: bring the rectified pair and any attached ground truth to the working size.
    Stopwatch sw;
    recon::StereoFrame frame;
    frame.index = input.stereo.index;
    const int w = config_.width, h = config_.height;
    const bool resize = input.stereo.left.width() != w || input.stereo.left.height() != h;
    if (resize) {
        frame.left = geom::resize_bilinear(input.stereo.left, w, h);
        frame.right = geom::resize_bilinear(input.stereo.right, w, h);
        if (input.stereo.gt_disparity) frame.gt_disparity = geom::resize_disparity(*input.stereo.gt_disparity, w, h);
        if (input.stereo.gt_mask) frame.gt_mask = geom::resize_nearest(*input.stereo.gt_mask, w, h);
    } else {
        frame.left = input.stereo.left;
        frame.right = input.stereo.right;
        frame.gt_disparity = input.stereo.gt_disparity;
        frame.gt_mask = input.stereo.gt_mask;
    }
    if (!frame.right.same_shape(frame.left)) throw InvalidArgument("left and right images differ in size");
    r.timing.preprocessing = sw.seconds();

    auto skip = [&](const std::string& why) {
        r.events.push_back(why);
        r.skipped = true;
        r.left = std::move(frame.left);
        r.right = std::move(frame.right);
        r.gauges = last_gauges_;
        r.timing.whole = whole.seconds();
        return r;
    };

    sw = Stopwatch();
    geom::DisparityMap disp;
    try {
        disp = depth_->disparity(frame);
    } catch (const Error& e) {
        return skip(std::string("provider_failure: ") + e.what());
    }
    r.timing.disparity = sw.seconds();
    if (disp.width() != w || disp.height() != h) return skip("provider_failure: disparity size mismatch");

    sw = Stopwatch();
    geom::BinaryMask mask;
    try {
        mask = recon::postprocess_mask(mask_->mask(frame), config_.post);
    } catch (const Error& e) {
        return skip(std::string("provider_failure: ") + e.what());
    }
    r.timing.mask_with_post = sw.seconds();
    if (mask.width() != w || mask.height() != h) return skip("provider_failure: mask size mismatch");

    sw = Stopwatch();
    const auto rect_cloud = recon::extract_masked_cloud(disp, mask, rig_);
    geom::PointCloud cloud(FrameId::ECM);
    if (!rect_cloud.empty()) {
        cloud = registration::voxel_downsample(recon::cloud_to_ecm(rect_cloud, graph_), config_.registration.voxel);
    }
    r.cloud_points = cloud.size();
    r.timing.cloud_gen_align = sw.seconds();

    sw = Stopwatch();
    if (!cloud.empty()) {
        const auto index = proximity::build_index(cloud);
        proximity::ProximityReport report;
        report.frame = r.m;
        report.left = proximity::min_distance(index, proximity::sample_instrument_cloud(r.left_arm, config_.sampling));
        report.right = proximity::min_distance(index, proximity::sample_instrument_cloud(r.right_arm, config_.sampling));
        r.proximity = report;
        last_gauges_ = proximity::gauge_state(report.d_left(), report.d_right());
    } else {
        r.events.push_back("empty_cloud");
    }
    r.gauges = last_gauges_;
    r.timing.distance = sw.seconds();

    sw = Stopwatch();
    if (!cloud.empty()) {
        if (!registration_) {
            // Partial intra-operative cloud onto the full model, then inverted.
            const auto g = registration::global_register(cloud, preop_cloud_, config_.registration.ransac);
            registration_ = g.transform.inverse();
            ++global_count_;
            r.events.push_back(g.fallback ? "global_registration_fallback" : "global_registration");
        }
        try {
            auto icp = registration::icp_register(cloud, preop_cloud_, *preop_tree_, registration_->inverse(), config_.registration.icp);
            registration_ = icp.transform.inverse();
            r.icp = std::move(icp);
        } catch (const NoConsensus&) {
            r.events.push_back("icp_no_consensus");
        }
        ++icp_count_;
        graph_.set(*registration_);
        last_cloud_ = std::move(cloud);
    }
    r.timing.registration = sw.seconds();

    sw = Stopwatch();
    r.left = std::move(frame.left);
    r.right = std::move(frame.right);
    if (config_.modality == Modality::Experiment) {
        if (registration_) {
            const auto color = r.gauges.model_color;
            const auto pl = overlay::project_model_rectified(preop_, graph_, rig_, geom::StereoSide::Left);
            const auto pr = overlay::project_model_rectified(preop_, graph_, rig_, geom::StereoSide::Right);
            r.left = overlay::render_overlay(r.left, pl, color, config_.style);
            r.right = overlay::render_overlay(r.right, pr, color, config_.style);
        }
        r.left = overlay::render_gauges(r.left, r.gauges, config_.style);
        r.right = overlay::render_gauges(r.right, r.gauges, config_.style);
    }
    r.timing.visualization = sw.seconds();
    r.timing.whole = whole.seconds();
    return r;
}

}  // namespace arsafe::pipeline
