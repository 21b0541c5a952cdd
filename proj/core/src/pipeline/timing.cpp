#include "arsafe/pipeline/timing.hpp"

#include <cmath>
#include <cstdio>

namespace arsafe::pipeline {

using nlohmann::json;

std::array<double, 8> TimingBreakdown::values() const {
    return {preprocessing, disparity, mask_with_post, cloud_gen_align, distance, registration, visualization, whole};
}

double TimingBreakdown::stage_sum() const {
    const auto v = values();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) s += v[i];
    return s;
}

std::vector<StageStats> timing_report(const std::vector<TimingBreakdown>& frames) {
    if (frames.size() < 2) throw InvalidArgument("timing report needs at least two frames");
    std::vector<StageStats> out;
    const double n = static_cast<double>(frames.size());
    for (std::size_t s = 0; s < kStageNames.size(); ++s) {
        // Shifted by the first sample so constant series come out exact.
        const double x0 = frames.front().values()[s];
        double sum = 0.0;
        for (const auto& f : frames) sum += f.values()[s] - x0;
        const double shift = sum / n;
        const double mean = x0 + shift;
        double sq = 0.0;
        for (const auto& f : frames) {
            const double d = (f.values()[s] - x0) - shift;
            sq += d * d;
        }
        out.push_back({kStageNames[s], mean, std::sqrt(sq / (n - 1.0))});
    }
    return out;
}

std::string format_timing_table(const std::vector<StageStats>& stats) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-50s %s\n", "Phase", "Time (s)");
    out += buf;
    for (const auto& s : stats) {
        std::snprintf(buf, sizeof(buf), "%-50s %.4f±%.4f\n", s.name.c_str(), s.mean, s.std);
        out += buf;
    }
    return out;
}

json to_json(const TimingBreakdown& t) {
    return {{"preprocessing", t.preprocessing}, {"disparity", t.disparity},
            {"mask_with_post", t.mask_with_post}, {"cloud_gen_align", t.cloud_gen_align},
            {"distance", t.distance},           {"registration", t.registration},
            {"visualization", t.visualization}, {"whole", t.whole}};
}

json to_json(const std::vector<StageStats>& stats) {
    json rows = json::array();
    for (const auto& s : stats) rows.push_back({{"phase", s.name}, {"mean_s", s.mean}, {"std_s", s.std}});
    return rows;
}

}  // namespace arsafe::pipeline
