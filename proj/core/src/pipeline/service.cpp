#include "arsafe/pipeline/service.hpp"

#include "arsafe/geom/io.hpp"
#include "arsafe/geom/json.hpp"
#include "arsafe/pipeline/metrics.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <deque>
#include <fstream>
#include <functional>
#include <optional>

namespace arsafe::pipeline {

using nlohmann::json;

json error_message(const std::string& code, const std::string& message) {
    return {{"type", "error"}, {"schema", kServiceSchema}, {"code", code}, {"message", message}};
}

json metrics_json(const SessionLog& log) {
    json m = json::object();
    auto guarded = [&](const char* key, auto&& f) {
        try {
            m[key] = f();
        } catch (const Error&) {
            m[key] = nullptr;
        }
    };
    guarded("d_min_m", [&] { return d_min(log); });
    const auto dm = d_mean(log);
    m["d_mean_m"] = dm ? json(*dm) : json(nullptr);
    m["collisions"] = collision_count(log);
    m["path_m"] = path_length(log);
    guarded("execution_time_s", [&] { return execution_time(log); });
    return m;
}

namespace {

Arm arm_from(const json& msg) {
    const auto a = msg.at("arm").get<std::string>();
    if (a == "left") return Arm::Left;
    if (a == "right") return Arm::Right;
    throw InvalidArgument("arm must be left or right");
}

Vec3 vec_field(const json& msg, const char* key) {
    const auto& v = msg.at(key);
    if (!v.is_array() || v.size() != 3) throw InvalidArgument(std::string(key) + " must be a 3-vector in meters");
    for (const auto& x : v) {
        if (!x.is_number()) throw InvalidArgument(std::string(key) + " must hold numbers");
    }
    return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

ServiceSession::ServiceSession(SessionSetup setup, bool images) : engine_(std::move(setup)), images_(images) {}

std::vector<json> ServiceSession::handle(const std::string& text) {
    json msg;
    try {
        msg = json::parse(text);
    } catch (const json::parse_error& e) {
        return {error_message("malformed_json", e.what())};
    }
    inputs_.push_back({{"seq", engine_.seq()}, {"message", msg}});
    try {
        json reply = dispatch(msg);
        if (reply.is_null()) return {};
        return {reply};
    } catch (const json::exception& e) {
        return {error_message("bad_message", e.what())};
    } catch (const InvalidArgument& e) {
        return {error_message("rejected", e.what())};
    } catch (const Error& e) {
        return {error_message("rejected", e.what())};
    }
}

json ServiceSession::dispatch(const json& msg) {
    if (!msg.is_object() || !msg.contains("type") || !msg.at("type").is_string()) {
        throw json::other_error::create(501, "message needs a string \"type\"", &msg);
    }
    const auto type = msg.at("type").get<std::string>();
    if (type == "command") {
        const Arm arm = arm_from(msg);
        const auto op = msg.at("op").get<std::string>();
        if (op == "move") {
            engine_.move(arm, vec_field(msg, "delta_m"));
        } else if (op == "set") {
            engine_.set_target(arm, vec_field(msg, "target_m"));
        } else if (op == "grasp") {
            engine_.set_grasp(arm, msg.at("closed").get<bool>());
        } else {
            throw InvalidArgument("unknown command op '" + op + "'");
        }
        return nullptr;
    }
    if (type == "trial") {
        const auto action = msg.at("action").get<std::string>();
        json reply = {{"type", "trial"}, {"schema", kServiceSchema}, {"action", action}, {"t_s", engine_.time()}};
        if (action == "start") {
            engine_.start_trial();
        } else if (action == "stop") {
            engine_.stop_trial();
            reply["metrics"] = metrics_json(engine_.log());
        } else {
            throw InvalidArgument("trial action must be start or stop");
        }
        return reply;
    }
    if (type == "sus") {
        const auto& a = msg.at("answers");
        if (!a.is_array() || a.size() != 10) throw InvalidArgument("sus needs exactly 10 answers");
        SusResponse r;
        for (std::size_t k = 0; k < 10; ++k) r.s[k] = a[k].get<int>();
        const double score = engine_.submit_sus(r);
        return {{"type", "sus"}, {"schema", kServiceSchema}, {"score", score}};
    }
    throw InvalidArgument("unknown message type '" + type + "'");
}

json ServiceSession::frame_message(const FrameResult& r) const {
    const auto& rec = engine_.log().frames.back();
    json f = {{"type", "frame"},
              {"schema", kServiceSchema},
              {"seq", rec.m},
              {"t_s", rec.t},
              {"modality", to_string(engine_.log().modality)},
              {"c_left_m", vec(rec.c_left)},
              {"c_right_m", vec(rec.c_right)},
              {"d_left_m", rec.d_left ? json(*rec.d_left) : json(nullptr)},
              {"d_right_m", rec.d_right ? json(*rec.d_right) : json(nullptr)},
              {"zone", rec.zone},
              {"nodes_picked", engine_.picked()},
              {"trial_running", engine_.trial_running()},
              {"events", rec.events},
              {"timing_s", to_json(r.timing)}};
    // Control hides the gauges from the client as well as from the image.
    f["gauges"] = engine_.log().modality == Modality::Experiment ? proximity::to_json(r.gauges) : json(nullptr);
    if (images_) {
        f["image_left_png_b64"] = geom::base64_encode(geom::encode_png(r.left));
        f["width"] = r.left.width();
        f["height"] = r.left.height();
    }
    return f;
}

json ServiceSession::tick() { return frame_message(engine_.tick()); }

SessionLog replay_session(SessionSetup setup, const std::vector<json>& inputs, std::size_t ticks) {
    ServiceSession s(std::move(setup), false);
    std::size_t next = 0;
    std::size_t last = 0;
    for (const auto& in : inputs) last = std::max(last, in.at("seq").get<std::size_t>());
    if (!inputs.empty() && ticks <= last) throw InvalidArgument("replay must run past the last recorded message");
    for (std::size_t k = 0; k < ticks; ++k) {
        while (next < inputs.size() && inputs[next].at("seq").get<std::size_t>() == k) {
            s.handle(inputs[next].at("message").dump());
            ++next;
        }
        s.tick();
    }
    return s.engine().log();
}

std::vector<json> read_inputs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open input recording '" + path.string() + "'");
    std::vector<json> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw IoError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

namespace {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace ws = beast::websocket;
using tcp = net::ip::tcp;

class Server {
public:
    Server(SessionSetup setup, const ServeOptions& opt)
        : opt_(opt),
          period_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
              std::chrono::duration<double>(1.0 / setup.config.tick_hz))),
          session_(std::move(setup), opt.images),
          acceptor_(ioc_),
          timer_(ioc_) {
        beast::error_code ec;
        const tcp::endpoint ep(net::ip::make_address(opt.address, ec), static_cast<unsigned short>(opt.port));
        if (ec) throw InvalidArgument("bad listen address '" + opt.address + "'");
        acceptor_.open(ep.protocol(), ec);
        if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
        if (!ec) acceptor_.bind(ep, ec);
        if (!ec) acceptor_.listen(1, ec);
        if (ec) {
            throw IoError("cannot listen on " + opt.address + ":" + std::to_string(opt.port) + ": " + ec.message());
        }
    }

    SessionLog run() {
        if (opt_.on_listening) opt_.on_listening(acceptor_.local_endpoint().port());
        acceptor_.async_accept([this](beast::error_code ec, tcp::socket sock) {
            if (ec) return finish();
            acceptor_.close();
            socket_.emplace(std::move(sock));
            socket_->async_accept([this](beast::error_code e) {
                if (e) return finish();
                connected_ = true;
                read();
                next_ = std::chrono::steady_clock::now();
                schedule();
            });
        });
        poll_stop();
        ioc_.run();
        save();
        return session_.engine().log();
    }

private:
    void poll_stop() {
        // Until a client is connected the tick timer is idle, so watch the stop flag here.
        if (connected_ || done_) return;
        timer_.expires_after(std::chrono::milliseconds(50));
        timer_.async_wait([this](beast::error_code ec) {
            if (ec || connected_) return;
            if (opt_.stop && opt_.stop->load()) return finish();
            poll_stop();
        });
    }

    void read() {
        socket_->async_read(buffer_, [this](beast::error_code ec, std::size_t) {
            if (ec) return finish();
            inbox_.push_back(beast::buffers_to_string(buffer_.data()));
            buffer_.consume(buffer_.size());
            read();
        });
    }

    void schedule() {
        if (done_) return;
        next_ += period_;
        if (opt_.realtime) {
            timer_.expires_at(next_);
        } else {
            timer_.expires_after(std::chrono::steady_clock::duration::zero());
        }
        timer_.async_wait([this](beast::error_code ec) {
            if (ec || done_) return;
            step();
        });
    }

    void step() {
        if (opt_.stop && opt_.stop->load()) return finish();
        while (!inbox_.empty()) {
            for (auto& r : session_.handle(inbox_.front())) send(r.dump(), false);
            inbox_.pop_front();
        }
        json frame;
        try {
            frame = session_.tick();
        } catch (const Error& e) {
            send(error_message("rejected", e.what()).dump(), false);
            return finish();
        }
        send(frame.dump(), true);
        ++ticks_;
        if (ticks_ % 30 == 0) save();
        if (opt_.max_ticks != 0 && ticks_ >= opt_.max_ticks) return finish_after_flush();
        // Never fall further behind than one tick.
        if (std::chrono::steady_clock::now() > next_ + period_) next_ = std::chrono::steady_clock::now();
        schedule();
    }

    void send(std::string text, bool frame) {
        // Bounded hand-off: stale frames waiting behind the one in flight are dropped.
        if (frame && outbox_.size() > 1) {
            for (auto it = outbox_.begin() + 1; it != outbox_.end();) {
                it = it->second ? outbox_.erase(it) : it + 1;
            }
        }
        outbox_.emplace_back(std::move(text), frame);
        if (!writing_) write();
    }

    void write() {
        if (outbox_.empty() || !socket_) {
            writing_ = false;
            if (closing_) close();
            return;
        }
        writing_ = true;
        socket_->text(true);
        socket_->async_write(net::buffer(outbox_.front().first), [this](beast::error_code ec, std::size_t) {
            outbox_.pop_front();
            if (ec) {
                writing_ = false;
                return finish();
            }
            write();
        });
    }

    void finish_after_flush() {
        done_ = true;
        closing_ = true;
        if (!writing_) close();
    }

    void close() {
        if (!socket_ || !socket_->is_open()) return finish();
        socket_->async_close(ws::close_code::normal, [this](beast::error_code) { finish(); });
    }

    void finish() {
        done_ = true;
        beast::error_code ec;
        timer_.cancel();
        acceptor_.close(ec);
        if (socket_) beast::get_lowest_layer(*socket_).close(ec);
    }

    void save() {
        if (!opt_.log_path.empty()) write_session(opt_.log_path, session_.engine().log());
        if (!opt_.inputs_path.empty()) {
            std::ofstream out(opt_.inputs_path);
            if (!out) throw IoError("cannot write '" + opt_.inputs_path.string() + "'");
            for (const auto& in : session_.inputs()) out << in.dump() << '\n';
        }
    }

    ServeOptions opt_;
    std::chrono::steady_clock::duration period_;
    ServiceSession session_;
    net::io_context ioc_{1};
    tcp::acceptor acceptor_;
    net::steady_timer timer_;
    std::optional<ws::stream<tcp::socket>> socket_;
    beast::flat_buffer buffer_;
    std::deque<std::string> inbox_;
    std::deque<std::pair<std::string, bool>> outbox_;
    std::chrono::steady_clock::time_point next_;
    std::size_t ticks_ = 0;
    bool connected_ = false;
    bool writing_ = false;
    bool closing_ = false;
    bool done_ = false;
};

}  // namespace

SessionLog serve(SessionSetup setup, const ServeOptions& options) {
    Server server(std::move(setup), options);
    return server.run();
}

}  // namespace arsafe::pipeline
