#pragma once

#include "arsafe/error.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <chrono>
#include <string>
#include <vector>

namespace arsafe::pipeline {

/// Seconds spent per stage of one frame.
struct TimingBreakdown {
    double preprocessing = 0.0;
    double disparity = 0.0;
    double mask_with_post = 0.0;
    double cloud_gen_align = 0.0;
    double distance = 0.0;
    double registration = 0.0;
    double visualization = 0.0;
    double whole = 0.0;

    std::array<double, 8> values() const;
    double stage_sum() const;
};

inline constexpr std::array<const char*, 8> kStageNames = {
    "Stereo image preprocessing",
    "Disparity map estimation",
    "Binary mask estimation with postprocessing",
    "Point cloud generation and alignment",
    "Distance calculation",
    "Registration between pre-op and intra-op targets",
    "Augmented reality visualization",
    "Whole pipeline"};

struct StageStats {
    std::string name;
    double mean = 0.0;  // s
    double std = 0.0;   // s, sample standard deviation
};

/// Mean and sample standard deviation per stage; needs at least two frames.
std::vector<StageStats> timing_report(const std::vector<TimingBreakdown>& frames);
std::string format_timing_table(const std::vector<StageStats>& stats);
nlohmann::json to_json(const TimingBreakdown& t);
nlohmann::json to_json(const std::vector<StageStats>& stats);

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace arsafe::pipeline
