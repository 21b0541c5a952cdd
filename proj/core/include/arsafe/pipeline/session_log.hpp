#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/frames.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace arsafe::pipeline {

using geom::Vec3;

enum class Modality { Control, Experiment };
std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

/// One processed frame. Distances are absent when the vessel could not be reconstructed.
struct FrameRecord {
    std::size_t m = 0;
    double t = 0.0;                 // s, session clock
    Vec3 c_left = Vec3::Zero();     // m, end effector positions (ECM)
    Vec3 c_right = Vec3::Zero();
    std::optional<double> d_left;   // m
    std::optional<double> d_right;
    std::string zone = "safe";      // "risk" when either arm is inside 3 cm
    std::vector<std::string> events;
    /// Wall-clock stage times (s); excluded from replay comparisons.
    std::optional<nlohmann::json> timing;
};

/// kind: "start", "end" or "pickup" (node set).
struct TaskMarker {
    std::string kind;
    double t = 0.0;
    std::optional<std::size_t> node;
};

/// Ten answers on the 1..5 scale.
struct SusResponse {
    std::array<int, 10> s{};
    void validate() const;
};

struct SessionLog {
    std::string subject;
    Modality modality = Modality::Experiment;
    std::vector<FrameRecord> frames;
    std::vector<TaskMarker> markers;
    std::optional<SusResponse> sus;

    /// Throws InvalidArgument unless t is strictly increasing.
    void append(FrameRecord r);
    void validate() const;
};

/// JSONL: a "session" header line, then "frame", "marker" and "sus" lines in order of arrival.
nlohmann::json to_json(const FrameRecord& r);
FrameRecord frame_record_from_json(const nlohmann::json& j);
std::string to_jsonl(const SessionLog& log);
SessionLog session_from_jsonl(const std::string& text);
void write_session(const std::filesystem::path& path, const SessionLog& log);
SessionLog read_session(const std::filesystem::path& path);
/// to_jsonl with wall-clock fields removed.
std::string replay_signature(const SessionLog& log);

}  // namespace arsafe::pipeline
