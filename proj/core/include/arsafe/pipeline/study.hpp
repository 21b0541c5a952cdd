#pragma once

#include "arsafe/error.hpp"
#include "arsafe/pipeline/metrics.hpp"
#include "arsafe/pipeline/session_log.hpp"
#include "arsafe/proximity/proximity.hpp"
#include "arsafe/sim/script.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace arsafe::pipeline {

/// Simulated participants for the Control vs Experiment comparison. Each subject gets a
/// personal clearance, hover time and pace; Experiment shifts the clearance up and the hover
/// time down, standing in for the effect of the AR cues.
struct StudyParams {
    std::size_t subjects = 10;
    std::uint64_t seed = 7;
    double tick_hz = 15.0;
    double control_clearance = 0.0035;     // m, tip gap over the vessel while hovering
    double experiment_clearance = 0.0090;  // m
    double clearance_spread = 0.0010;      // m, uniform per subject
    double control_hover = 1.4;            // s
    double experiment_hover = 0.6;         // s
    double pace_spread = 0.15;             // relative, uniform per subject
    double jitter = 0.001;                 // m, waypoint jitter
    double vessel_spacing = 0.0005;        // m, target spacing of the vessel surface samples
    proximity::SamplingParams sampling;

    void validate() const;
};

struct StudyResult {
    std::vector<SessionLog> control;
    std::vector<SessionLog> experiment;
    ModalityReport report;
};

/// Logs a scripted session against the true vessel surface without rendering: at every tick
/// the instrument samples are measured against dense vessel samples in ECM.
SessionLog run_geometric_session(const sim::SceneConfig& scene, const sim::TrajectoryScript& script, Modality modality,
                                 const std::string& subject, double tick_hz,
                                 const proximity::SamplingParams& sampling = {}, double vessel_spacing = 0.0005);

/// Questionnaire answers drawn around a modality-specific mean.
SusResponse simulated_sus(Modality modality, std::uint64_t seed);

StudyResult run_study(const sim::SceneConfig& scene, const StudyParams& params);

}  // namespace arsafe::pipeline
