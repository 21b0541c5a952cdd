#pragma once

#include "arsafe/error.hpp"
#include "arsafe/proximity/proximity.hpp"
#include "arsafe/sim/scene.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string_view>
#include <vector>

namespace arsafe::sim {

enum class Arm : std::uint8_t { Left = 0, Right = 1 };
std::string_view to_string(Arm a);

struct Keyframe {
    double t = 0.0;     // s
    Vec3 ee{0, 0, 0};   // m, ECM
    bool grasp = false; // closed from this keyframe on
};

struct ArmScript {
    Vec3 rcm{0, 0, 0};  // m, ECM
    std::vector<Keyframe> keys;
};

struct NodePickup {
    double t = 0.0;
    std::size_t node = 0;
    Arm arm = Arm::Left;
};

/// Piecewise-linear end-effector paths about fixed RCMs, plus node pickups and the task
/// start/end markers.
struct TrajectoryScript {
    ArmScript left;
    ArmScript right;
    std::vector<NodePickup> pickups;
    double task_start = 0.0;
    double task_end = 0.0;

    void validate() const;
    double start() const;  // latest first keyframe
    double end() const;    // earliest last keyframe
};

struct ArmState {
    proximity::InstrumentModel model;
    bool grasp = false;
};

struct ScriptSample {
    ArmState left;
    ArmState right;
    std::vector<std::uint8_t> node_present;
};

/// Linear interpolation between the bracketing keyframes of each arm; InvalidArgument
/// outside [start(), end()].
ScriptSample evaluate_script(const TrajectoryScript& script, double t, std::size_t node_count);
Vec3 arm_position(const ArmScript& arm, double t);

/// Sum of keyframe segment lengths over both arms.
double script_path_length(const TrajectoryScript& script);

SceneState scene_state(const ScriptSample& s);

/// Knobs for the bundled node-removal task.
struct LymphScriptParams {
    double clearance = 0.008;   // m, gap between tip and vessel top while hovering
    double hover_time = 0.5;    // s
    double speed_scale = 1.0;   // > 1 is slower
    double jitter = 0.0;        // m, uniform per-waypoint perturbation
    std::uint64_t seed = 0;
};

/// Left arm removes the six left nodes, the right arm the four right nodes, then both return
/// home. Each pickup is: above node, descend, grasp, lift, hover over the vessel, home.
TrajectoryScript lymphadenectomy_script(const SceneConfig& scene, const LymphScriptParams& params = {});

void to_json(nlohmann::json& j, const TrajectoryScript& s);
TrajectoryScript script_from_json(const nlohmann::json& j);

}  // namespace arsafe::sim
