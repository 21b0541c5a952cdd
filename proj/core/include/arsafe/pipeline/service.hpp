#pragma once

#include "arsafe/error.hpp"
#include "arsafe/pipeline/session.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace arsafe::pipeline {

inline constexpr int kServiceSchema = 1;

/// Client to service:
///   {"type":"command","arm":"left"|"right","op":"move","delta_m":[x,y,z]}
///   {"type":"command","arm":...,"op":"set","target_m":[x,y,z]}
///   {"type":"command","arm":...,"op":"grasp","closed":bool}
///   {"type":"trial","action":"start"|"stop"}
///   {"type":"sus","answers":[10 ints in 1..5]}
/// Service to client: "frame", "trial" (with metrics on stop), "sus" (score), "error".
/// Error codes: malformed_json, bad_message, rejected.
nlohmann::json error_message(const std::string& code, const std::string& message);

/// Metrics of a (possibly running) log; absent values are null.
nlohmann::json metrics_json(const SessionLog& log);

/// Transport-free session: messages in, replies out. Bad input never throws; it yields an
/// "error" reply and the session carries on. Inbound messages are recorded with the tick
/// they were applied before, so a recording replays to the same log.
class ServiceSession {
public:
    explicit ServiceSession(SessionSetup setup, bool images = true);

    std::vector<nlohmann::json> handle(const std::string& text);
    /// Advances one tick and returns its "frame" message.
    nlohmann::json tick();

    SessionEngine& engine() { return engine_; }
    const SessionEngine& engine() const { return engine_; }
    /// {"seq": tick, "message": ...} per accepted-or-rejected well-formed JSON message.
    const std::vector<nlohmann::json>& inputs() const { return inputs_; }

private:
    nlohmann::json dispatch(const nlohmann::json& msg);
    nlohmann::json frame_message(const FrameResult& r) const;

    SessionEngine engine_;
    bool images_;
    std::vector<nlohmann::json> inputs_;
};

/// Replays a recording: messages are applied before the tick they were recorded at, and the
/// session runs `ticks` ticks in total (at least one past the last message).
SessionLog replay_session(SessionSetup setup, const std::vector<nlohmann::json>& inputs, std::size_t ticks);
std::vector<nlohmann::json> read_inputs(const std::filesystem::path& path);

struct ServeOptions {
    std::string address = "127.0.0.1";
    int port = 8765;
    std::size_t max_ticks = 0;  // 0: until the client disconnects or stop is set
    bool images = true;
    bool realtime = true;  // pace ticks at the configured rate; otherwise as fast as processing allows
    std::filesystem::path log_path;     // session JSONL, rewritten as frames arrive
    std::filesystem::path inputs_path;  // recorded inbound messages
    std::atomic<bool>* stop = nullptr;
    /// Called once the port is bound, with the actual port (useful with port 0).
    std::function<void(int)> on_listening;
};

/// WebSocket service for one interactive session: accepts a single client, streams frames at
/// the tick rate, applies inbound messages at tick boundaries. Throws IoError when the port
/// cannot be bound. Returns the final log.
SessionLog serve(SessionSetup setup, const ServeOptions& options);

}  // namespace arsafe::pipeline
