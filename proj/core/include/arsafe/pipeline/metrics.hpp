#pragma once

#include "arsafe/error.hpp"
#include "arsafe/pipeline/session_log.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace arsafe::pipeline {

inline constexpr double kCollisionRadius = 0.005;  // m
inline constexpr double kCollisionDwell = 1.0;     // s
inline constexpr double kRiskArea = 0.03;          // m

/// Smallest per-arm per-frame distance in the log. InvalidArgument when there is none.
double d_min(const SessionLog& log);
/// Mean of the per-arm per-frame distances strictly below `risk`; absent when there are none.
std::optional<double> d_mean(const SessionLog& log, double risk = kRiskArea);

enum class CollisionRule {
    PerRun,     // each maximal below-threshold run lasting >= dwell counts once
    PerSecond,  // each run counts floor(duration / dwell)
};

/// Runs are per arm; a frame with no distance, or with distance >= r, ends a run. Duration is
/// the time from the first to the last frame of the run.
int collision_count(const SessionLog& log, double r = kCollisionRadius, double dwell = kCollisionDwell,
                    CollisionRule rule = CollisionRule::PerRun);
/// Sum over consecutive frames of both end-effector displacements.
double path_length(const SessionLog& log);
/// Last "end" marker minus first "start" marker.
double execution_time(const SessionLog& log);

double sus_score(const SusResponse& r);

struct WilcoxonResult {
    std::size_t n = 0;       // nonzero differences
    double w_plus = 0.0;     // sum of ranks of positive differences
    double w_minus = 0.0;
    double statistic = 0.0;  // min(w_plus, w_minus)
    double p = 1.0;          // two-sided
    bool exact = true;
};

/// Signed-rank test on a_i - b_i. Zero differences are dropped, ties get midranks. Exact
/// distribution for n <= 25 (enumeration of sign patterns by dynamic programming), normal
/// approximation with tie and continuity correction above. InvalidArgument when all
/// differences are zero or sizes differ.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// Two-sided exact p of the statistic T = min(W+, W-) for n untied nonzero differences.
double wilcoxon_exact_p(std::size_t n, double statistic);
/// Largest T with exact two-sided p <= alpha; -1 when none exists.
int wilcoxon_critical_value(std::size_t n, double alpha = 0.05);

/// "ns", "*", "**", "***" or "****".
std::string significance_stars(double p);

struct MetricRow {
    std::string name;
    std::string unit;
    double control_mean = 0.0;
    double experiment_mean = 0.0;
    std::size_t pairs = 0;
    double p = 1.0;
    bool tested = false;  // false when every paired difference was zero
    std::string stars;
};

struct ModalityReport {
    std::vector<MetricRow> rows;  // D_min, D_mean, N_c, S_p, T_exe, SUS
};

/// Pairs logs by subject (by position when subjects are blank). Distances and paths in cm.
ModalityReport compare_modalities(const std::vector<SessionLog>& control, const std::vector<SessionLog>& experiment);
std::string format_report(const ModalityReport& r);
nlohmann::json to_json(const ModalityReport& r);

}  // namespace arsafe::pipeline
