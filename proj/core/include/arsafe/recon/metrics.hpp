#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/raster.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace arsafe::recon {

using geom::BinaryMask;
using geom::DepthMap;
using geom::ProbabilityMap;

inline const std::vector<double> kDefaultTaus{1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25};

/// Depth accuracy over S = pixels finite in both maps with positive ground truth.
struct DepthEvalReport {
    double meae = 0.0;     // m, lower median of |pred - gt|
    double mae = 0.0;      // m
    double rmse = 0.0;     // m
    double abs_rel = 0.0;  // unitless
    double sq_rel = 0.0;   // m
    std::vector<double> taus;
    std::vector<double> delta;  // fraction of S with max(p/g, g/p) < tau, per tau
    std::size_t valid = 0;      // |S|
};

/// Throws InvalidArgument on size mismatch and DegenerateInput when S is empty.
DepthEvalReport depth_metrics(const DepthMap& pred, const DepthMap& gt, const std::vector<double>& taus = kDefaultTaus);

struct SegEvalReport {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    // Absent when the denominator is zero.
    std::optional<double> dice, accuracy, specificity, sensitivity, precision;
    std::optional<double> pr_area;
};

SegEvalReport seg_metrics(const BinaryMask& pred, const BinaryMask& gt);

struct PrPoint {
    double threshold = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

/// Operating points for every distinct probability (prob >= t is positive), in order of
/// increasing recall, preceded by (recall 0, precision of the first point).
std::vector<PrPoint> pr_curve(const ProbabilityMap& prob, const BinaryMask& gt);

/// Trapezoidal area under pr_curve over recall. Throws DegenerateInput without positives.
double pr_curve_area(const ProbabilityMap& prob, const BinaryMask& gt);

nlohmann::json to_json(const DepthEvalReport& r);
nlohmann::json to_json(const SegEvalReport& r);

/// Aligned text tables, one row per named method. Depth errors are printed in millimetres.
std::string format_depth_table(const std::vector<std::pair<std::string, DepthEvalReport>>& rows);
std::string format_seg_table(const std::vector<std::pair<std::string, SegEvalReport>>& rows);

}  // namespace arsafe::recon
