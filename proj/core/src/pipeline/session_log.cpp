#include "arsafe/pipeline/session_log.hpp"

#include "arsafe/geom/json.hpp"

#include <fstream>
#include <sstream>

namespace arsafe::pipeline {

using nlohmann::json;

std::string to_string(Modality m) { return m == Modality::Control ? "control" : "experiment"; }

Modality modality_from_string(const std::string& s) {
    if (s == "control") return Modality::Control;
    if (s == "experiment") return Modality::Experiment;
    throw InvalidArgument("unknown modality '" + s + "' (expected control or experiment)");
}

void SusResponse::validate() const {
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] < 1 || s[k] > 5) {
            throw InvalidArgument("SUS answer " + std::to_string(k + 1) + " is " + std::to_string(s[k]) +
                                  ", expected 1..5");
        }
    }
}

void SessionLog::append(FrameRecord r) {
    if (!frames.empty() && !(r.t > frames.back().t)) {
        throw InvalidArgument("session frame times must be strictly increasing");
    }
    frames.push_back(std::move(r));
}

void SessionLog::validate() const {
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (!(frames[i].t > frames[i - 1].t)) throw InvalidArgument("session frame times must be strictly increasing");
    }
    if (sus) sus->validate();
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

json to_json(const FrameRecord& r) {
    json j{{"type", "frame"},
           {"m", r.m},
           {"t_s", r.t},
           {"c_left_m", geom::vec_to_json(r.c_left)},
           {"c_right_m", geom::vec_to_json(r.c_right)},
           {"d_left_m", optional_number(r.d_left)},
           {"d_right_m", optional_number(r.d_right)},
           {"zone", r.zone},
           {"events", r.events}};
    if (r.timing) j["timing_s"] = *r.timing;
    return j;
}

FrameRecord frame_record_from_json(const json& j) {
    FrameRecord r;
    r.m = j.at("m").get<std::size_t>();
    r.t = j.at("t_s").get<double>();
    r.c_left = geom::vec_from_json(j.at("c_left_m"));
    r.c_right = geom::vec_from_json(j.at("c_right_m"));
    r.d_left = number_or_null(j, "d_left_m");
    r.d_right = number_or_null(j, "d_right_m");
    r.zone = j.value("zone", "safe");
    r.events = j.value("events", std::vector<std::string>{});
    if (j.contains("timing_s")) r.timing = j.at("timing_s");
    return r;
}

namespace {

json marker_json(const TaskMarker& m) {
    json j{{"type", "marker"}, {"kind", m.kind}, {"t_s", m.t}};
    if (m.node) j["node"] = *m.node;
    return j;
}

std::string render(const SessionLog& log, bool with_wall_clock) {
    std::ostringstream out;
    out << json{{"type", "session"}, {"schema", 1}, {"subject", log.subject}, {"modality", to_string(log.modality)}}
               .dump()
        << '\n';
    // Markers are interleaved by time after the frame they follow.
    std::size_t mi = 0;
    for (const auto& f : log.frames) {
        while (mi < log.markers.size() && log.markers[mi].t < f.t) out << marker_json(log.markers[mi++]).dump() << '\n';
        json j = to_json(f);
        if (!with_wall_clock) j.erase("timing_s");
        out << j.dump() << '\n';
    }
    while (mi < log.markers.size()) out << marker_json(log.markers[mi++]).dump() << '\n';
    if (log.sus) out << json{{"type", "sus"}, {"answers", log.sus->s}}.dump() << '\n';
    return out.str();
}

}  // namespace

std::string to_jsonl(const SessionLog& log) { return render(log, true); }
std::string replay_signature(const SessionLog& log) { return render(log, false); }

SessionLog session_from_jsonl(const std::string& text) {
    SessionLog log;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            const std::string type = j.at("type").get<std::string>();
            if (type == "session") {
                log.subject = j.value("subject", "");
                log.modality = modality_from_string(j.at("modality").get<std::string>());
                header = true;
            } else if (type == "frame") {
                log.append(frame_record_from_json(j));
            } else if (type == "marker") {
                TaskMarker m{j.at("kind").get<std::string>(), j.at("t_s").get<double>(), std::nullopt};
                if (j.contains("node")) m.node = j.at("node").get<std::size_t>();
                log.markers.push_back(m);
            } else if (type == "sus") {
                SusResponse r;
                r.s = j.at("answers").get<std::array<int, 10>>();
                r.validate();
                log.sus = r;
            } else {
                throw InvalidArgument("unknown record type '" + type + "'");
            }
        } catch (const json::exception& e) {
            throw InvalidArgument("session log line " + std::to_string(line_no) + ": " + e.what());
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("session log line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header) throw InvalidArgument("session log has no session header");
    return log;
}

void write_session(const std::filesystem::path& path, const SessionLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out << to_jsonl(log);
    if (!out) throw IoError(path.string() + ": write failed");
}

SessionLog read_session(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return session_from_jsonl(ss.str());
    } catch (const InvalidArgument& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace arsafe::pipeline
