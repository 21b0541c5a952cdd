#include "arsafe/pipeline/study.hpp"

#include "arsafe/random.hpp"
#include "arsafe/registration/features.hpp"
#include "arsafe/sim/vessel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Geometry>

namespace arsafe::pipeline {

namespace {

// Exact minimum, visiting instrument samples by their box lower bound and stopping once no
// remaining sample can beat the best distance.
double pruned_min_distance(const proximity::SpatialIndex& index, const Eigen::AlignedBox3d& box,
                           const geom::PointCloud& inst) {
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(inst.size());
    for (std::size_t i = 0; i < inst.size(); ++i) order.emplace_back(box.squaredExteriorDistance(inst.points[i]), i);
    std::sort(order.begin(), order.end());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [lb, i] : order) {
        if (lb >= best) break;
        best = std::min(best, index.tree().nearest(inst.points[i]).dist2);
    }
    return std::sqrt(best);
}

}  // namespace

void StudyParams::validate() const {
    if (subjects < 1) throw InvalidArgument("study needs at least one subject");
    if (!(tick_hz > 0.0)) throw InvalidArgument("tick rate must be positive");
    if (!(clearance_spread >= 0.0) || !(control_clearance - clearance_spread > 0.0) ||
        !(experiment_clearance - clearance_spread > 0.0)) {
        throw InvalidArgument("clearances must stay positive across the spread");
    }
    if (!(control_hover >= 0.0) || !(experiment_hover >= 0.0)) throw InvalidArgument("hover times must be >= 0");
    if (!(pace_spread >= 0.0 && pace_spread < 1.0)) throw InvalidArgument("pace spread must be in [0, 1)");
    if (!(jitter >= 0.0)) throw InvalidArgument("jitter must be >= 0");
    if (!(vessel_spacing > 0.0)) throw InvalidArgument("vessel sample spacing must be positive");
}

SessionLog run_geometric_session(const sim::SceneConfig& scene, const sim::TrajectoryScript& script, Modality modality,
                                 const std::string& subject, double tick_hz, const proximity::SamplingParams& sampling,
                                 double vessel_spacing) {
    script.validate();
    if (!(tick_hz > 0.0)) throw InvalidArgument("tick rate must be positive");
    const auto mesh = sim::build_vessel_mesh(scene.vessel, geom::FrameId::ECM);
    const auto n = static_cast<std::size_t>(std::ceil(mesh.total_area() / (vessel_spacing * vessel_spacing)));
    const auto vessel = registration::sample_mesh_points(mesh, n, 0);
    const auto index = proximity::build_index(vessel);
    Eigen::AlignedBox3d box;
    for (const auto& p : vessel.points) box.extend(p);

    SessionLog log;
    log.subject = subject;
    log.modality = modality;
    const std::size_t nodes = scene.nodes.centers.size();
    const double t0 = script.start(), t1 = script.end();
    const auto ticks = static_cast<std::size_t>(std::floor((t1 - t0) * tick_hz)) + 1;
    double prev = -1.0;
    for (std::size_t m = 0; m < ticks; ++m) {
        const double t = t0 + static_cast<double>(m) / tick_hz;
        const auto s = sim::evaluate_script(script, t, nodes);
        if (script.task_start > prev && script.task_start <= t) log.markers.push_back({"start", script.task_start, {}});
        for (const auto& p : script.pickups) {
            if (p.t > prev && p.t <= t) log.markers.push_back({"pickup", p.t, p.node});
        }
        if (script.task_end > prev && script.task_end <= t) log.markers.push_back({"end", script.task_end, {}});
        FrameRecord r;
        r.m = m;
        r.t = t;
        r.c_left = s.left.model.ee;
        r.c_right = s.right.model.ee;
        r.d_left = pruned_min_distance(index, box, proximity::sample_instrument_cloud(s.left.model, sampling));
        r.d_right = pruned_min_distance(index, box, proximity::sample_instrument_cloud(s.right.model, sampling));
        r.zone = std::min(*r.d_left, *r.d_right) < kRiskArea ? "risk" : "safe";
        log.append(std::move(r));
        prev = t;
    }
    return log;
}

SusResponse simulated_sus(Modality modality, std::uint64_t seed) {
    // Odd items are positive statements, even items negative ones.
    const bool ar = modality == Modality::Experiment;
    const double odd = ar ? 3.8 : 3.5;
    const double even = ar ? 1.9 : 2.2;
    auto rng = make_rng(seed, 3);
    SusResponse r;
    for (std::size_t k = 0; k < 10; ++k) {
        const double mu = k % 2 == 0 ? odd : even;
        r.s[k] = static_cast<int>(std::clamp(std::lround(mu + 0.7 * normal(rng)), 1L, 5L));
    }
    return r;
}

StudyResult run_study(const sim::SceneConfig& scene, const StudyParams& params) {
    params.validate();
    StudyResult out;
    for (std::size_t i = 0; i < params.subjects; ++i) {
        const std::string subject = "S" + std::to_string(i + 1);
        auto rng = make_rng(mix_seed(params.seed, i), 0);
        const double personal = uniform(rng, -params.clearance_spread, params.clearance_spread);
        const double pace = 1.0 + uniform(rng, -params.pace_spread, params.pace_spread);
        for (Modality mod : {Modality::Control, Modality::Experiment}) {
            const bool ar = mod == Modality::Experiment;
            sim::LymphScriptParams lp;
            lp.clearance = (ar ? params.experiment_clearance : params.control_clearance) + personal;
            lp.hover_time = ar ? params.experiment_hover : params.control_hover;
            lp.speed_scale = pace * (ar ? 0.97 : 1.0);
            lp.jitter = params.jitter;
            lp.seed = mix_seed(params.seed, 2 * i + (ar ? 1 : 0));
            const auto script = sim::lymphadenectomy_script(scene, lp);
            auto log = run_geometric_session(scene, script, mod, subject, params.tick_hz, params.sampling,
                                             params.vessel_spacing);
            log.sus = simulated_sus(mod, mix_seed(params.seed, 1000 + 2 * i + (ar ? 1 : 0)));
            (ar ? out.experiment : out.control).push_back(std::move(log));
        }
    }
    out.report = compare_modalities(out.control, out.experiment);
    return out;
}

}  // namespace arsafe::pipeline
