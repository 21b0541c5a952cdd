#include "arsafe/sim/script.hpp"

#include "arsafe/geom/json.hpp"
#include "arsafe/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace arsafe::sim {

using nlohmann::json;

std::string_view to_string(Arm a) { return a == Arm::Left ? "left" : "right"; }

namespace {

void validate_arm(const ArmScript& a, std::string_view name) {
    if (a.keys.empty()) throw InvalidArgument(std::string(name) + " arm script has no keyframes");
    for (std::size_t i = 0; i < a.keys.size(); ++i) {
        if (!std::isfinite(a.keys[i].t) || !a.keys[i].ee.allFinite()) {
            throw InvalidArgument(std::string(name) + " arm keyframe " + std::to_string(i) + " is not finite");
        }
        if (i > 0 && !(a.keys[i].t > a.keys[i - 1].t)) {
            throw InvalidArgument(std::string(name) + " arm keyframe times must be strictly increasing");
        }
        if (!((a.keys[i].ee - a.rcm).norm() > 0.0)) {
            throw DegenerateInput(std::string(name) + " arm end effector coincides with its RCM");
        }
    }
}

std::size_t bracket(const ArmScript& arm, double t) {
    const auto it = std::upper_bound(arm.keys.begin(), arm.keys.end(), t,
                                     [](double x, const Keyframe& k) { return x < k.t; });
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - arm.keys.begin()) - 1));
}

ArmState arm_state(const ArmScript& arm, double t) {
    ArmState s;
    s.model.rcm = arm.rcm;
    s.model.ee = arm_position(arm, t);
    s.grasp = arm.keys[bracket(arm, t)].grasp;
    return s;
}

}  // namespace

void TrajectoryScript::validate() const {
    validate_arm(left, "left");
    validate_arm(right, "right");
    if (!(start() <= end())) throw InvalidArgument("arm scripts do not overlap in time");
    if (!(task_start <= task_end)) throw InvalidArgument("task end precedes task start");
}

double TrajectoryScript::start() const { return std::max(left.keys.front().t, right.keys.front().t); }
double TrajectoryScript::end() const { return std::min(left.keys.back().t, right.keys.back().t); }

Vec3 arm_position(const ArmScript& arm, double t) {
    if (arm.keys.empty() || t < arm.keys.front().t || t > arm.keys.back().t) {
        throw InvalidArgument("time " + std::to_string(t) + " s is outside the arm script");
    }
    const std::size_t k = bracket(arm, t);
    const Keyframe& a = arm.keys[k];
    if (t == a.t || k + 1 == arm.keys.size()) return a.ee;
    const Keyframe& b = arm.keys[k + 1];
    if (t == b.t) return b.ee;
    const double s = (t - a.t) / (b.t - a.t);
    return (1.0 - s) * a.ee + s * b.ee;
}

ScriptSample evaluate_script(const TrajectoryScript& script, double t, std::size_t node_count) {
    script.validate();
    if (!(t >= script.start() && t <= script.end())) {
        throw InvalidArgument("time " + std::to_string(t) + " s is outside the script span [" +
                              std::to_string(script.start()) + ", " + std::to_string(script.end()) + "]");
    }
    ScriptSample s;
    s.left = arm_state(script.left, t);
    s.right = arm_state(script.right, t);
    s.node_present.assign(node_count, 1);
    for (const auto& p : script.pickups) {
        if (p.node >= node_count) throw InvalidArgument("pickup refers to node " + std::to_string(p.node));
        if (p.t <= t) s.node_present[p.node] = 0;
    }
    return s;
}

double script_path_length(const TrajectoryScript& script) {
    double total = 0.0;
    for (const ArmScript* a : {&script.left, &script.right}) {
        for (std::size_t i = 1; i < a->keys.size(); ++i) total += (a->keys[i].ee - a->keys[i - 1].ee).norm();
    }
    return total;
}

SceneState scene_state(const ScriptSample& s) {
    SceneState st;
    st.instruments = {s.left.model, s.right.model};
    st.node_present = s.node_present;
    return st;
}

namespace {

// Nearest centreline sample of the main vessel to `p` in the xy plane.
Vec3 vessel_top_near(const SceneConfig& scene, const Vec3& p) {
    const auto& cp = scene.vessel.control_points;
    const double smax = static_cast<double>(cp.size() - 1);
    Vec3 best = cp.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 400; ++i) {
        const Vec3 c = centerline_point(cp, smax * i / 400.0);
        const double d = (c - p).head<2>().norm();
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best - Vec3(0, 0, scene.vessel.radius);
}

class Builder {
public:
    Builder(ArmScript& arm, double t0, Vec3 home) : arm_(arm), t_(t0) { arm_.keys.push_back({t0, home, false}); }

    void move(const Vec3& p, double dt, bool grasp) {
        t_ += dt;
        arm_.keys.push_back({t_, p, grasp});
    }
    void hold(double dt) { move(arm_.keys.back().ee, dt, arm_.keys.back().grasp); }
    double time() const { return t_; }
    void set_time(double t) {
        if (t > t_) hold(t - t_);
    }

private:
    ArmScript& arm_;
    double t_;
};

}  // namespace

TrajectoryScript lymphadenectomy_script(const SceneConfig& scene, const LymphScriptParams& params) {
    scene.validate();
    if (scene.nodes.centers.size() != 10) throw InvalidArgument("the node-removal task expects ten nodes");
    if (!(params.clearance > 0.0) || !(params.hover_time >= 0.0) || !(params.speed_scale > 0.0) ||
        !(params.jitter >= 0.0)) {
        throw InvalidArgument("invalid task parameters");
    }
    auto rng = make_rng(params.seed, 17);
    auto jitter = [&](const Vec3& p) {
        if (params.jitter == 0.0) return p;
        const double x = uniform(rng, -params.jitter, params.jitter);
        const double y = uniform(rng, -params.jitter, params.jitter);
        return Vec3(p + Vec3(x, y, 0.0));
    };
    const double k = params.speed_scale;
    TrajectoryScript s;
    s.left.rcm = Vec3(-0.075, 0.02, 0.02);
    s.right.rcm = Vec3(0.075, 0.02, 0.02);
    const Vec3 home_l(-0.03, 0.0, 0.075), home_r(0.03, 0.0, 0.075);
    Builder bl(s.left, 0.0, home_l), br(s.right, 0.0, home_r);
    const double r = scene.nodes.radius;
    auto visit = [&](Builder& b, std::size_t node, Arm arm, const Vec3& home) {
        const Vec3 c = scene.nodes.centers[node];
        const Vec3 above = jitter(c - Vec3(0, 0, 0.015));
        b.move(above, 1.5 * k, false);
        b.move(c - Vec3(0, 0, r), 1.0 * k, false);
        b.move(c - Vec3(0, 0, r), 0.5 * k, true);
        s.pickups.push_back({b.time(), node, arm});
        b.move(above, 0.8 * k, true);
        const Vec3 hover = jitter(vessel_top_near(scene, c)) - Vec3(0, 0, params.clearance);
        b.move(hover, 1.0 * k, true);
        b.hold(params.hover_time);
        b.move(home, 1.5 * k, false);
    };
    s.task_start = 0.5;
    bl.hold(0.5);
    br.hold(0.5);
    for (std::size_t i = 0; i < 6; ++i) visit(bl, i, Arm::Left, home_l);
    br.set_time(bl.time());
    for (std::size_t i = 6; i < 10; ++i) visit(br, i, Arm::Right, home_r);
    bl.set_time(br.time());
    s.task_end = br.time();
    bl.hold(0.5);
    br.hold(0.5);
    s.validate();
    return s;
}

namespace {

json arm_to_json(const ArmScript& a) {
    json keys = json::array();
    for (const auto& k : a.keys) keys.push_back({{"t_s", k.t}, {"ee_m", geom::vec_to_json(k.ee)}, {"grasp", k.grasp}});
    return {{"rcm_m", geom::vec_to_json(a.rcm)}, {"keyframes", keys}};
}

ArmScript arm_from_json(const json& j) {
    ArmScript a;
    a.rcm = geom::vec_from_json(j.at("rcm_m"));
    for (const auto& k : j.at("keyframes")) {
        a.keys.push_back({k.at("t_s").get<double>(), geom::vec_from_json(k.at("ee_m")), k.value("grasp", false)});
    }
    return a;
}

}  // namespace

void to_json(json& j, const TrajectoryScript& s) {
    json pickups = json::array();
    for (const auto& p : s.pickups) pickups.push_back({{"t_s", p.t}, {"node", p.node}, {"arm", to_string(p.arm)}});
    j = json{{"left", arm_to_json(s.left)},
             {"right", arm_to_json(s.right)},
             {"pickups", pickups},
             {"task_start_s", s.task_start},
             {"task_end_s", s.task_end}};
}

TrajectoryScript script_from_json(const json& j) {
    TrajectoryScript s;
    try {
        s.left = arm_from_json(j.at("left"));
        s.right = arm_from_json(j.at("right"));
        if (j.contains("pickups")) {
            for (const auto& p : j.at("pickups")) {
                const auto arm = p.at("arm").get<std::string>();
                if (arm != "left" && arm != "right") throw InvalidArgument("unknown arm '" + arm + "'");
                s.pickups.push_back({p.at("t_s").get<double>(), p.at("node").get<std::size_t>(),
                                     arm == "left" ? Arm::Left : Arm::Right});
            }
        }
        s.task_start = j.value("task_start_s", s.left.keys.empty() ? 0.0 : s.left.keys.front().t);
        s.task_end = j.value("task_end_s", s.left.keys.empty() ? 0.0 : s.left.keys.back().t);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed trajectory script: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace arsafe::sim
