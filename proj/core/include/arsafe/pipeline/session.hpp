#pragma once

#include "arsafe/error.hpp"
#include "arsafe/pipeline/pipeline.hpp"
#include "arsafe/pipeline/session_log.hpp"
#include "arsafe/sim/script.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace arsafe::pipeline {

using sim::Arm;

/// Everything a simulated session needs: the scene, the planted pre-operative pose, the
/// arm-to-arm and arm-to-endoscope kinematics and the pipeline settings.
struct SessionSetup {
    sim::SceneConfig scene;
    RigidTransform bl_to_ecm{FrameId::BL, FrameId::ECM};
    RigidTransform ee1_to_ee2{FrameId::EE1, FrameId::EE2};
    RigidTransform ee2_to_ecm{FrameId::EE2, FrameId::ECM};
    PipelineConfig config;
    std::string subject;
    /// Used instead of the exact calibration when set.
    std::optional<Calibration> calibration;
};

/// Default scene with non-trivial BL, EE1 and EE2 placements.
SessionSetup default_setup();

/// Exact calibration of the simulated rig, or the override when one is set.
Calibration exact_calibration(const SessionSetup& s);

/// Simulation clock plus pipeline: each tick renders the scene at the current arm state,
/// processes the frame and appends a log record. Arms follow a script when one is set,
/// otherwise the commanded targets.
class SessionEngine {
public:
    explicit SessionEngine(SessionSetup setup);
    SessionEngine(SessionSetup setup, std::unique_ptr<recon::DepthProvider> depth,
                  std::unique_ptr<recon::MaskProvider> mask);

    /// Script time 0 is the first tick; markers and pickups come from the script.
    void set_script(sim::TrajectoryScript script);
    bool scripted() const { return script_.has_value(); }
    /// True once a script has run past its last keyframe.
    bool script_done() const;

    void move(Arm arm, const Vec3& delta);   // m, ECM
    void set_target(Arm arm, const Vec3& ee); // m, ECM
    /// Closing near a present node (within node radius + 3 mm) picks it up.
    void set_grasp(Arm arm, bool closed);
    Vec3 target(Arm arm) const { return ee_[static_cast<int>(arm)]; }
    bool grasp(Arm arm) const { return grasp_[static_cast<int>(arm)]; }

    /// InvalidArgument for a second start or a stop without start.
    void start_trial();
    void stop_trial();
    bool trial_running() const { return running_; }
    /// Returns the score.
    double submit_sus(const SusResponse& r);

    FrameResult tick();
    /// Time the next tick will carry.
    double time() const;
    std::size_t seq() const { return seq_; }
    std::size_t picked() const;
    const std::vector<std::uint8_t>& nodes() const { return present_; }

    const SessionLog& log() const { return log_; }
    SessionLog& log() { return log_; }
    Pipeline& pipeline() { return *pipeline_; }
    const Pipeline& pipeline() const { return *pipeline_; }
    const SessionSetup& setup() const { return setup_; }

    /// Arm models in ECM at the current state.
    proximity::InstrumentModel arm_model(Arm arm) const;
    FrameInput make_input(const sim::RenderedViews& views) const;

private:
    void pickup(std::size_t node, Arm arm, double t);

    SessionSetup setup_;
    std::unique_ptr<Pipeline> pipeline_;
    std::optional<sim::TrajectoryScript> script_;
    std::array<Vec3, 2> rcm_;
    std::array<Vec3, 2> ee_;
    std::array<bool, 2> grasp_{false, false};
    std::vector<std::uint8_t> present_;
    std::size_t seq_ = 0;
    bool running_ = false;
    bool ever_started_ = false;
    SessionLog log_;
};

/// Rigid motion rotating by angle about axis then translating.
RigidTransform make_transform(const Vec3& axis, double angle, const Vec3& t, FrameId from, FrameId to);

}  // namespace arsafe::pipeline
