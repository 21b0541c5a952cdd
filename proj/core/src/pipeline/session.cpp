#include "arsafe/pipeline/session.hpp"

#include "arsafe/pipeline/metrics.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>

namespace arsafe::pipeline {

RigidTransform make_transform(const Vec3& axis, double angle, const Vec3& t, FrameId from, FrameId to) {
    const geom::Mat3 r = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
    return RigidTransform(r, t, from, to);
}

SessionSetup default_setup() {
    SessionSetup s;
    s.scene = sim::default_scene();
    s.bl_to_ecm = make_transform(Vec3(0.3, -0.2, 1.0), 0.7, Vec3(0.02, -0.015, 0.11), FrameId::BL, FrameId::ECM);
    s.ee1_to_ee2 = make_transform(Vec3(0.0, 0.1, 1.0), 2.8, Vec3(0.21, 0.015, -0.02), FrameId::EE1, FrameId::EE2);
    s.ee2_to_ecm = make_transform(Vec3(1.0, 0.2, 0.0), -0.45, Vec3(0.12, -0.04, 0.06), FrameId::EE2, FrameId::ECM);
    s.subject = "sim";
    return s;
}

Calibration exact_calibration(const SessionSetup& s) {
    if (s.calibration) return *s.calibration;
    return make_calibration(s.scene.rig, s.scene.ecm_to_cam, s.ee1_to_ee2, s.ee2_to_ecm);
}

SessionEngine::SessionEngine(SessionSetup setup)
    : SessionEngine(setup, make_depth_provider(setup.config), make_mask_provider(setup.config)) {}

SessionEngine::SessionEngine(SessionSetup setup, std::unique_ptr<recon::DepthProvider> depth,
                             std::unique_ptr<recon::MaskProvider> mask)
    : setup_(std::move(setup)) {
    setup_.scene.validate();
    if (setup_.bl_to_ecm.from() != FrameId::BL || setup_.bl_to_ecm.to() != FrameId::ECM) {
        throw FrameMismatch("planted pre-operative pose must map BL to ECM");
    }
    pipeline_ = std::make_unique<Pipeline>(setup_.config, exact_calibration(setup_),
                                           sim::preop_vessel(setup_.scene, setup_.bl_to_ecm), std::move(depth),
                                           std::move(mask));
    const auto home = sim::lymphadenectomy_script(setup_.scene);
    rcm_ = {home.left.rcm, home.right.rcm};
    ee_ = {home.left.keys.front().ee, home.right.keys.front().ee};
    present_.assign(setup_.scene.nodes.centers.size(), 1);
    log_.subject = setup_.subject;
    log_.modality = setup_.config.modality;
}

void SessionEngine::set_script(sim::TrajectoryScript script) {
    script.validate();
    if (seq_ != 0) throw InvalidArgument("a script must be set before the first tick");
    rcm_ = {script.left.rcm, script.right.rcm};
    script_ = std::move(script);
}

bool SessionEngine::script_done() const {
    return script_ && seq_ > 0 && static_cast<double>(seq_ - 1) / setup_.config.tick_hz >= script_->end();
}

void SessionEngine::move(Arm arm, const Vec3& delta) {
    if (!delta.allFinite()) throw InvalidArgument("move delta must be finite");
    set_target(arm, ee_[static_cast<int>(arm)] + delta);
}

void SessionEngine::set_target(Arm arm, const Vec3& ee) {
    if (!ee.allFinite()) throw InvalidArgument("target must be finite");
    if (!((ee - rcm_[static_cast<int>(arm)]).norm() > 1e-3)) {
        throw InvalidArgument("target coincides with the remote centre of motion");
    }
    ee_[static_cast<int>(arm)] = ee;
}

void SessionEngine::set_grasp(Arm arm, bool closed) {
    const int a = static_cast<int>(arm);
    if (closed && !grasp_[a]) {
        const auto& nodes = setup_.scene.nodes;
        const double reach = nodes.radius + 0.003;
        std::size_t best = nodes.centers.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nodes.centers.size(); ++i) {
            const double d = (nodes.centers[i] - ee_[a]).norm();
            if (present_[i] && d <= reach && d < best_d) {
                best = i;
                best_d = d;
            }
        }
        if (best < nodes.centers.size()) pickup(best, arm, time());
    }
    grasp_[a] = closed;
}

void SessionEngine::pickup(std::size_t node, Arm, double t) {
    present_.at(node) = 0;
    log_.markers.push_back({"pickup", t, node});
}

void SessionEngine::start_trial() {
    if (running_) throw InvalidArgument("trial already running");
    running_ = true;
    ever_started_ = true;
    log_.markers.push_back({"start", time(), std::nullopt});
}

void SessionEngine::stop_trial() {
    if (!running_) throw InvalidArgument("no trial running");
    running_ = false;
    log_.markers.push_back({"end", time(), std::nullopt});
}

double SessionEngine::submit_sus(const SusResponse& r) {
    r.validate();
    log_.sus = r;
    return sus_score(r);
}

double SessionEngine::time() const { return static_cast<double>(seq_) / setup_.config.tick_hz; }

std::size_t SessionEngine::picked() const {
    return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), std::uint8_t{0}));
}

proximity::InstrumentModel SessionEngine::arm_model(Arm arm) const {
    proximity::InstrumentModel m;
    m.ee = ee_[static_cast<int>(arm)];
    m.rcm = rcm_[static_cast<int>(arm)];
    m.frame = FrameId::ECM;
    return m;
}

FrameInput SessionEngine::make_input(const sim::RenderedViews& views) const {
    FrameInput in;
    in.stereo.index = seq_;
    in.stereo.left = views.rgb_l;
    in.stereo.right = views.rgb_r;
    in.stereo.gt_disparity = views.disp_gt;
    in.stereo.gt_mask = views.mask_gt;
    // Kinematics as the arms report them: PSM2 in its own base, PSM1 in its own base.
    const auto ecm_to_ee2 = setup_.ee2_to_ecm.inverse();
    const auto ecm_to_ee1 = compose(ecm_to_ee2, setup_.ee1_to_ee2.inverse());
    auto express = [](proximity::InstrumentModel m, const RigidTransform& t) {
        m.ee = t.apply(m.ee);
        m.rcm = t.apply(m.rcm);
        m.frame = t.to();
        return m;
    };
    in.arms.left = express(arm_model(Arm::Left), ecm_to_ee2);
    in.arms.right = express(arm_model(Arm::Right), ecm_to_ee1);
    return in;
}

FrameResult SessionEngine::tick() {
    const double t = time();
    if (script_) {
        const auto& s = *script_;
        const double ts = std::clamp(t, s.start(), s.end());
        const auto sample = sim::evaluate_script(s, ts, present_.size());
        ee_ = {sample.left.model.ee, sample.right.model.ee};
        grasp_ = {sample.left.grasp, sample.right.grasp};
        const double prev = seq_ == 0 ? -std::numeric_limits<double>::infinity() : static_cast<double>(seq_ - 1) / setup_.config.tick_hz;
        if (s.task_start > prev && s.task_start <= t) log_.markers.push_back({"start", s.task_start, std::nullopt});
        for (const auto& p : s.pickups) {
            if (p.t > prev && p.t <= t && present_.at(p.node)) pickup(p.node, p.arm, p.t);
        }
        if (s.task_end > prev && s.task_end <= t) log_.markers.push_back({"end", s.task_end, std::nullopt});
    }

    sim::SceneState state;
    state.instruments = {arm_model(Arm::Left), arm_model(Arm::Right)};
    state.node_present = present_;
    const auto views = sim::render_views(setup_.scene, state);
    auto result = pipeline_->process_frame(make_input(views));

    FrameRecord rec;
    rec.m = seq_;
    rec.t = t;
    rec.c_left = result.left_arm.ee;
    rec.c_right = result.right_arm.ee;
    if (result.proximity) {
        rec.d_left = result.proximity->d_left();
        rec.d_right = result.proximity->d_right();
        rec.zone = std::min(*rec.d_left, *rec.d_right) < kRiskArea ? "risk" : "safe";
    }
    rec.events = result.events;
    rec.timing = to_json(result.timing);
    log_.append(std::move(rec));
    ++seq_;
    return result;
}

}  // namespace arsafe::pipeline
