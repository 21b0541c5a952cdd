#include "arsafe/recon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace arsafe::recon {

namespace {

constexpr double kRatioFloor = 1e-12;

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (!a.same_shape(b)) {
        throw InvalidArgument(std::string(what) + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                              " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
    }
}

std::optional<double> ratio(double num, double den) {
    if (den == 0.0) return std::nullopt;
    return num / den;
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string fmt(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

std::string fmt(const std::optional<double>& v, int precision) { return v ? fmt(*v, precision) : "n/a"; }

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size(), 0);
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == 0) {
                os << cells[c] << std::string(width[c] - cells[c].size(), ' ');
            } else {
                os << "  " << std::string(width[c] - cells[c].size(), ' ') << cells[c];
            }
        }
        os << '\n';
    };
    line(header);
    std::size_t total = 0;
    for (auto w : width) total += w;
    os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    for (const auto& r : rows) line(r);
    return os.str();
}

}  // namespace

DepthEvalReport depth_metrics(const DepthMap& pred, const DepthMap& gt, const std::vector<double>& taus) {
    require_same_shape(pred, gt, "depth maps differ in size");
    DepthEvalReport r;
    r.taus = taus;
    r.delta.assign(taus.size(), 0.0);
    std::vector<double> abs_err;
    abs_err.reserve(pred.size());
    std::vector<std::size_t> within(taus.size(), 0);
    double sum_abs = 0.0, sum_sq = 0.0, sum_rel = 0.0, sum_sq_rel = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = pred.values()[i];
        const double g = gt.values()[i];
        if (!geom::is_valid(p) || !geom::is_valid(g) || !(g > 0.0)) continue;
        const double e = std::abs(p - g);
        abs_err.push_back(e);
        sum_abs += e;
        sum_sq += e * e;
        sum_rel += e / g;
        sum_sq_rel += e * e / g;
        const double pc = std::max(p, kRatioFloor);
        const double worst = std::max(pc / g, g / pc);
        for (std::size_t t = 0; t < taus.size(); ++t) within[t] += worst < taus[t] ? 1 : 0;
    }
    if (abs_err.empty()) throw DegenerateInput("no pixel is valid in both depth maps");
    const double n = static_cast<double>(abs_err.size());
    r.valid = abs_err.size();
    const auto mid = abs_err.begin() + static_cast<std::ptrdiff_t>((abs_err.size() - 1) / 2);
    std::nth_element(abs_err.begin(), mid, abs_err.end());
    r.meae = *mid;
    r.mae = sum_abs / n;
    r.rmse = std::sqrt(sum_sq / n);
    r.abs_rel = sum_rel / n;
    r.sq_rel = sum_sq_rel / n;
    for (std::size_t t = 0; t < taus.size(); ++t) r.delta[t] = static_cast<double>(within[t]) / n;
    return r;
}

SegEvalReport seg_metrics(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_shape(pred, gt, "masks differ in size");
    SegEvalReport r;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred.values()[i] != 0;
        const bool g = gt.values()[i] != 0;
        if (p && g) ++r.tp;
        else if (p) ++r.fp;
        else if (g) ++r.fn;
        else ++r.tn;
    }
    const auto tp = static_cast<double>(r.tp);
    const auto tn = static_cast<double>(r.tn);
    const auto fp = static_cast<double>(r.fp);
    const auto fn = static_cast<double>(r.fn);
    r.dice = ratio(2.0 * tp, 2.0 * tp + fp + fn);
    r.accuracy = ratio(tp + tn, tp + tn + fp + fn);
    r.specificity = ratio(tn, tn + fp);
    r.sensitivity = ratio(tp, tp + fn);
    r.precision = ratio(tp, tp + fp);
    return r;
}

std::vector<PrPoint> pr_curve(const ProbabilityMap& prob, const BinaryMask& gt) {
    require_same_shape(prob, gt, "probability map and mask differ in size");
    const std::size_t positives = count_on(gt);
    if (positives == 0) throw DegenerateInput("ground truth has no positive pixel");
    std::vector<std::size_t> order(prob.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (double p : prob.values()) {
        if (!std::isfinite(p)) throw InvalidArgument("probability map contains non-finite values");
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return prob.values()[a] > prob.values()[b]; });
    std::vector<PrPoint> curve;
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double t = prob.values()[order[i]];
        while (i < order.size() && prob.values()[order[i]] == t) {
            if (gt.values()[order[i]] != 0) ++tp;
            else ++fp;
            ++i;
        }
        curve.push_back({t, static_cast<double>(tp) / static_cast<double>(positives),
                         static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }
    curve.insert(curve.begin(), PrPoint{curve.front().threshold, 0.0, curve.front().precision});
    return curve;
}

double pr_curve_area(const ProbabilityMap& prob, const BinaryMask& gt) {
    const auto curve = pr_curve(prob, gt);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        area += (curve[i].recall - curve[i - 1].recall) * 0.5 * (curve[i].precision + curve[i - 1].precision);
    }
    return area;
}

nlohmann::json to_json(const DepthEvalReport& r) {
    return {{"meae_m", r.meae},   {"mae_m", r.mae},      {"rmse_m", r.rmse}, {"abs_rel", r.abs_rel},
            {"sq_rel_m", r.sq_rel}, {"taus", r.taus}, {"delta", r.delta}, {"valid", r.valid}};
}

nlohmann::json to_json(const SegEvalReport& r) {
    return {{"tp", r.tp},
            {"tn", r.tn},
            {"fp", r.fp},
            {"fn", r.fn},
            {"dice", opt_json(r.dice)},
            {"accuracy", opt_json(r.accuracy)},
            {"specificity", opt_json(r.specificity)},
            {"sensitivity", opt_json(r.sensitivity)},
            {"precision", opt_json(r.precision)},
            {"pr_area", opt_json(r.pr_area)}};
}

std::string format_depth_table(const std::vector<std::pair<std::string, DepthEvalReport>>& rows) {
    std::vector<std::string> header{"method", "MeAE(mm)", "MAE(mm)", "RMSE(mm)", "AbsRel", "SqRel(mm)"};
    std::vector<double> taus = rows.empty() ? kDefaultTaus : rows.front().second.taus;
    for (double t : taus) header.push_back("d<" + fmt(t, 3));
    header.push_back("valid");
    std::vector<std::vector<std::string>> cells;
    for (const auto& [name, r] : rows) {
        std::vector<std::string> row{name,
                                     fmt(r.meae * 1e3, 3),
                                     fmt(r.mae * 1e3, 3),
                                     fmt(r.rmse * 1e3, 3),
                                     fmt(r.abs_rel, 4),
                                     fmt(r.sq_rel * 1e3, 4)};
        for (std::size_t t = 0; t < taus.size(); ++t) row.push_back(t < r.delta.size() ? fmt(r.delta[t], 4) : "n/a");
        row.push_back(std::to_string(r.valid));
        cells.push_back(std::move(row));
    }
    return render_table(header, cells);
}

std::string format_seg_table(const std::vector<std::pair<std::string, SegEvalReport>>& rows) {
    const std::vector<std::string> header{"method",      "Dice",        "Accuracy",  "Specificity",
                                          "Sensitivity", "Precision",   "PR-area"};
    std::vector<std::vector<std::string>> cells;
    for (const auto& [name, r] : rows) {
        cells.push_back({name, fmt(r.dice, 4), fmt(r.accuracy, 4), fmt(r.specificity, 4), fmt(r.sensitivity, 4),
                         fmt(r.precision, 4), fmt(r.pr_area, 4)});
    }
    return render_table(header, cells);
}

}  // namespace arsafe::recon
