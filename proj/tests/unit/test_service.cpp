#include "arsafe/geom/io.hpp"
#include "arsafe/overlay/overlay.hpp"
#include "arsafe/pipeline/metrics.hpp"
#include "arsafe/pipeline/service.hpp"
#include "arsafe/pipeline/session.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <future>
#include <thread>

namespace arsafe::pipeline {
namespace {

using nlohmann::json;

// Largest pixel offset between the model projected through the registered pose and through
// the planted one, over vertices visible in both.
double overlay_error_px(const SessionEngine& e) {
    FrameGraph truth = e.pipeline().graph();
    truth.set(e.setup().bl_to_ecm);
    const auto& rig = e.pipeline().rig();
    const auto est = overlay::project_model_rectified(e.pipeline().preop(), e.pipeline().graph(), rig, geom::StereoSide::Left);
    const auto ref = overlay::project_model_rectified(e.pipeline().preop(), truth, rig, geom::StereoSide::Left);
    double worst = 0.0;
    for (std::size_t i = 0; i < est.pixels.size(); ++i) {
        if (!est.visible[i] || !ref.visible[i]) continue;
        worst = std::max(worst, (est.pixels[i] - ref.pixels[i]).norm());
    }
    return worst;
}

class ThrowingDepth : public recon::DepthProvider {
public:
    geom::DisparityMap disparity(const recon::StereoFrame&) override { throw IoError("stereo network offline"); }
};

class EmptyMask : public recon::MaskProvider {
public:
    geom::BinaryMask mask(const recon::StereoFrame& f) override {
        return geom::BinaryMask(f.left.width(), f.left.height(), geom::kMaskOff);
    }
};

SessionSetup scripted_setup(Modality m = Modality::Experiment) {
    auto s = default_setup();
    s.config.modality = m;
    return s;
}

TEST(Pipeline, GroundTruthSessionRegistersOnceAndOverlaysWithinOnePixel) {
    SessionEngine e(scripted_setup());
    e.set_script(sim::lymphadenectomy_script(e.setup().scene));
    for (int i = 0; i < 8; ++i) {
        const auto r = e.tick();
        EXPECT_FALSE(r.skipped);
        ASSERT_TRUE(r.proximity.has_value());
        ASSERT_TRUE(r.icp.has_value());
        const auto& h = r.icp->cost_history;
        for (std::size_t k = 1; k < h.size(); ++k) EXPECT_LE(h[k], h[k - 1]);
    }
    EXPECT_EQ(e.pipeline().global_registrations(), 1U);
    EXPECT_EQ(e.pipeline().icp_runs(), 8U);
    EXPECT_EQ(e.pipeline().frames_processed(), 8U);
    EXPECT_LT(overlay_error_px(e), 1.0);
}

TEST(Pipeline, TimingAccounting) {
    SessionEngine e(scripted_setup());
    for (int i = 0; i < 3; ++i) {
        const auto t = e.tick().timing;
        for (double v : t.values()) EXPECT_GE(v, 0.0);
        const auto v = t.values();
        EXPECT_GE(t.whole, *std::max_element(v.begin(), v.end() - 1));
        EXPECT_LE(t.stage_sum(), t.whole + 1e-3);
    }
}

TEST(Pipeline, ParkedInstrumentsGiveFullNeutralGauges) {
    SessionEngine e(scripted_setup());
    for (Arm a : {Arm::Left, Arm::Right}) {
        const auto m = e.arm_model(a);
        e.set_target(a, m.rcm + Vec3(0.0, -0.01, 0.01));
    }
    const auto r = e.tick();
    ASSERT_TRUE(r.proximity.has_value());
    EXPECT_GT(r.proximity->d_left(), 0.06);
    EXPECT_GT(r.proximity->d_right(), 0.06);
    EXPECT_EQ(r.gauges.left_gauge, proximity::kSafeRange);
    EXPECT_EQ(r.gauges.right_gauge, proximity::kSafeRange);
    EXPECT_EQ(r.gauges.band, proximity::Band::Neutral);
}

TEST(Pipeline, ProviderFailureSkipsTheFrame) {
    SessionEngine e(scripted_setup(), std::make_unique<ThrowingDepth>(), std::make_unique<recon::GroundTruthMaskProvider>());
    const auto r = e.tick();
    EXPECT_TRUE(r.skipped);
    EXPECT_FALSE(r.proximity.has_value());
    ASSERT_EQ(e.log().frames.size(), 1U);
    EXPECT_FALSE(e.log().frames[0].d_left.has_value());
    ASSERT_FALSE(e.log().frames[0].events.empty());
    EXPECT_NE(e.log().frames[0].events[0].find("provider_failure"), std::string::npos);
    EXPECT_EQ(e.pipeline().icp_runs(), 0U);
}

TEST(Pipeline, EmptyCloudMarksDistancesUnavailable) {
    SessionEngine e(scripted_setup(), std::make_unique<recon::GroundTruthDepthProvider>(), std::make_unique<EmptyMask>());
    const auto r = e.tick();
    EXPECT_FALSE(r.skipped);
    EXPECT_FALSE(r.proximity.has_value());
    EXPECT_EQ(r.cloud_points, 0U);
    EXPECT_FALSE(e.pipeline().registered());
    EXPECT_EQ(e.log().frames[0].events, std::vector<std::string>{"empty_cloud"});
}

TEST(Pipeline, ControlModalityDrawsNothing) {
    SessionEngine e(scripted_setup(Modality::Control));
    sim::SceneState state;
    state.instruments = {e.arm_model(Arm::Left), e.arm_model(Arm::Right)};
    const auto views = sim::render_views(e.setup().scene, state);
    const auto r = e.tick();
    ASSERT_TRUE(r.proximity.has_value());
    EXPECT_TRUE(e.pipeline().registered());
    EXPECT_EQ(r.left.values(), views.rgb_l.values());
    EXPECT_EQ(r.right.values(), views.rgb_r.values());
}

TEST(Pipeline, ExperimentModalityDrawsOverlay) {
    SessionEngine e(scripted_setup(Modality::Experiment));
    sim::SceneState state;
    state.instruments = {e.arm_model(Arm::Left), e.arm_model(Arm::Right)};
    const auto views = sim::render_views(e.setup().scene, state);
    const auto r = e.tick();
    EXPECT_NE(r.left.values(), views.rgb_l.values());
}

TEST(Pipeline, RejectsPreopOutsideBaseFrame) {
    auto s = default_setup();
    auto mesh = sim::preop_vessel(s.scene, s.bl_to_ecm);
    mesh.frame = FrameId::ECM;
    EXPECT_THROW(Pipeline(s.config, exact_calibration(s), mesh, make_depth_provider(s.config), make_mask_provider(s.config)),
                 FrameMismatch);
}

TEST(Pipeline, CalibrationJsonRoundTrip) {
    const auto s = default_setup();
    const auto c = exact_calibration(s);
    const auto back = calibration_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    auto j = to_json(c);
    j["transforms"] = json::array();
    EXPECT_THROW(calibration_from_json(j), MissingTransform);
}

// --- engine -------------------------------------------------------------------------------

TEST(Engine, MoveCommandEchoesInNextFrame) {
    SessionEngine e(scripted_setup(Modality::Control));
    e.tick();
    const Vec3 before = e.log().frames.back().c_left;
    e.move(Arm::Left, Vec3(0.01, 0.0, 0.0));
    e.tick();
    const Vec3 after = e.log().frames.back().c_left;
    EXPECT_NEAR(after.x() - before.x(), 0.01, 1e-9);
    EXPECT_NEAR(after.y() - before.y(), 0.0, 1e-9);
    EXPECT_NEAR(after.z() - before.z(), 0.0, 1e-9);
}

TEST(Engine, TrialMarkersAndRejections) {
    SessionEngine e(scripted_setup(Modality::Control));
    EXPECT_THROW(e.stop_trial(), InvalidArgument);
    e.start_trial();
    EXPECT_THROW(e.start_trial(), InvalidArgument);
    e.tick();
    e.tick();
    e.stop_trial();
    ASSERT_EQ(e.log().markers.size(), 2U);
    EXPECT_EQ(e.log().markers[0].kind, "start");
    EXPECT_EQ(e.log().markers[1].kind, "end");
    EXPECT_NEAR(execution_time(e.log()), 2.0 / e.setup().config.tick_hz, 1e-12);
}

TEST(Engine, GraspNearNodePicksItUp) {
    SessionEngine e(scripted_setup(Modality::Control));
    const Vec3 node = e.setup().scene.nodes.centers[2];
    e.set_target(Arm::Left, node - Vec3(0, 0, e.setup().scene.nodes.radius));
    e.set_grasp(Arm::Left, true);
    EXPECT_EQ(e.picked(), 1U);
    EXPECT_EQ(e.nodes()[2], 0);
    ASSERT_EQ(e.log().markers.size(), 1U);
    EXPECT_EQ(*e.log().markers[0].node, 2U);
    // Far from every node: nothing happens.
    e.set_grasp(Arm::Left, false);
    e.set_target(Arm::Left, Vec3(-0.03, 0.0, 0.06));
    e.set_grasp(Arm::Left, true);
    EXPECT_EQ(e.picked(), 1U);
}

TEST(Engine, ScriptedPickupsRemoveNodes) {
    auto s = scripted_setup(Modality::Control);
    sim::TrajectoryScript script = sim::lymphadenectomy_script(s.scene);
    SessionEngine e(s);
    e.set_script(script);
    const double first = script.pickups.front().t;
    const auto ticks = static_cast<std::size_t>(std::ceil(first * s.config.tick_hz)) + 1;
    for (std::size_t i = 0; i < ticks; ++i) e.tick();
    EXPECT_EQ(e.picked(), 1U);
    EXPECT_EQ(e.nodes()[script.pickups.front().node], 0);
    EXPECT_EQ(e.log().markers.front().kind, "start");
}

// --- service ------------------------------------------------------------------------------

TEST(Service, HundredTicksGiveMonotoneFrames) {
    ServiceSession s(scripted_setup(Modality::Control), false);
    std::int64_t last = -1;
    for (int i = 0; i < 100; ++i) {
        const auto f = s.tick();
        EXPECT_EQ(f["type"], "frame");
        EXPECT_EQ(f["schema"], kServiceSchema);
        const auto seq = f["seq"].get<std::int64_t>();
        EXPECT_EQ(seq, last + 1);
        last = seq;
        EXPECT_TRUE(f["gauges"].is_null());
    }
}

TEST(Service, MalformedMessagesAreTypedErrors) {
    ServiceSession s(scripted_setup(Modality::Control), false);
    auto expect_error = [&](const std::string& text, const std::string& code) {
        const auto r = s.handle(text);
        ASSERT_EQ(r.size(), 1U) << text;
        EXPECT_EQ(r[0]["type"], "error");
        EXPECT_EQ(r[0]["code"], code) << text;
    };
    expect_error("{not json", "malformed_json");
    expect_error("[1,2]", "bad_message");
    expect_error(R"({"type":"command","arm":"left","op":"move"})", "bad_message");
    expect_error(R"({"type":"command","arm":"middle","op":"move","delta_m":[0,0,0]})", "rejected");
    expect_error(R"({"type":"command","arm":"left","op":"move","delta_m":[0,0]})", "rejected");
    expect_error(R"({"type":"teleport"})", "rejected");
    expect_error(R"({"type":"trial","action":"stop"})", "rejected");
    expect_error(R"({"type":"sus","answers":[1,2,3]})", "rejected");
    expect_error(R"({"type":"sus","answers":[1,2,3,4,5,6,1,2,3,4]})", "rejected");
    // Still alive.
    EXPECT_EQ(s.tick()["seq"], 0);
}

TEST(Service, MoveTrialAndSusRoundTrip) {
    ServiceSession s(scripted_setup(Modality::Experiment), false);
    const auto f0 = s.tick();
    EXPECT_FALSE(f0["gauges"].is_null());
    EXPECT_TRUE(s.handle(R"({"type":"command","arm":"right","op":"move","delta_m":[0.01,0,0]})").empty());
    const auto f1 = s.tick();
    EXPECT_NEAR(f1["c_right_m"][0].get<double>() - f0["c_right_m"][0].get<double>(), 0.01, 1e-9);
    const auto start = s.handle(R"({"type":"trial","action":"start"})");
    ASSERT_EQ(start.size(), 1U);
    EXPECT_EQ(start[0]["type"], "trial");
    const auto again = s.handle(R"({"type":"trial","action":"start"})");
    EXPECT_EQ(again[0]["type"], "error");
    s.tick();
    s.tick();
    const auto stop = s.handle(R"({"type":"trial","action":"stop"})");
    ASSERT_EQ(stop.size(), 1U);
    EXPECT_TRUE(stop[0]["metrics"].contains("d_min_m"));
    EXPECT_NEAR(stop[0]["metrics"]["execution_time_s"].get<double>(), 2.0 / 30.0, 1e-12);
    EXPECT_EQ(stop[0]["metrics"]["d_min_m"].get<double>(), d_min(s.engine().log()));
    const std::pair<const char*, double> fixtures[] = {{"[5,1,5,1,5,1,5,1,5,1]", 100.0},
                                                       {"[3,3,3,3,3,3,3,3,3,3]", 50.0},
                                                       {"[4,2,4,2,4,2,4,2,4,2]", 75.0}};
    for (const auto& [answers, score] : fixtures) {
        const auto r = s.handle(std::string(R"({"type":"sus","answers":)") + answers + "}");
        ASSERT_EQ(r.size(), 1U);
        EXPECT_EQ(r[0]["type"], "sus");
        EXPECT_EQ(r[0]["score"].get<double>(), score);
    }
}

TEST(Service, FrameCarriesPngImage) {
    ServiceSession s(scripted_setup(Modality::Experiment), true);
    const auto f = s.tick();
    const auto bytes = geom::base64_decode(f["image_left_png_b64"].get<std::string>());
    const auto img = geom::decode_png(bytes);
    EXPECT_EQ(img.width(), 640);
    EXPECT_EQ(img.height(), 360);
}

TEST(Service, RecordedInputsReplayBitwise) {
    std::vector<json> inputs;
    std::string recorded;
    {
        ServiceSession s(scripted_setup(Modality::Control), false);
        for (int k = 0; k < 12; ++k) {
            if (k == 1) s.handle(R"({"type":"trial","action":"start"})");
            if (k == 3) s.handle(R"({"type":"command","arm":"left","op":"move","delta_m":[0.004,0.001,0.01]})");
            if (k == 5) s.handle(R"({"type":"command","arm":"right","op":"set","target_m":[0.02,0.0,0.08]})");
            if (k == 6) s.handle("{garbage");
            if (k == 8) s.handle(R"({"type":"command","arm":"left","op":"grasp","closed":true})");
            if (k == 10) s.handle(R"({"type":"trial","action":"stop"})");
            s.tick();
        }
        s.handle(R"({"type":"sus","answers":[4,2,4,2,4,2,4,2,4,2]})");
        inputs = s.inputs();
        recorded = replay_signature(s.engine().log());
    }
    // The trailing SUS arrives after the last tick; replay applies it before one more tick.
    auto replayed = replay_session(scripted_setup(Modality::Control), inputs, 13);
    replayed.frames.pop_back();
    EXPECT_EQ(replay_signature(replayed), recorded);
}

// --- WebSocket transport --------------------------------------------------------------------

TEST(Serve, StreamsFramesAndSurvivesBadMessages) {
    namespace net = boost::asio;
    namespace beast = boost::beast;
    std::promise<int> port_promise;
    auto port_future = port_promise.get_future();
    ServeOptions opt;
    opt.port = 0;
    opt.images = false;
    opt.realtime = false;
    opt.max_ticks = 40;
    opt.on_listening = [&](int p) { port_promise.set_value(p); };
    auto server = std::async(std::launch::async, [&] { return serve(scripted_setup(Modality::Control), opt); });
    const int port = port_future.get();

    net::io_context ioc;
    beast::websocket::stream<net::ip::tcp::socket> ws(ioc);
    ws.next_layer().connect({net::ip::make_address("127.0.0.1"), static_cast<unsigned short>(port)});
    ws.handshake("127.0.0.1", "/");
    ws.write(net::buffer(std::string("{broken")));
    ws.write(net::buffer(std::string(R"({"type":"trial","action":"start"})")));
    std::int64_t last_seq = -1;
    bool saw_error = false, saw_trial = false;
    std::size_t frames = 0;
    beast::flat_buffer buf;
    beast::error_code ec;
    while (true) {
        ws.read(buf, ec);
        if (ec) break;
        const auto msg = json::parse(beast::buffers_to_string(buf.data()));
        buf.consume(buf.size());
        if (msg["type"] == "frame") {
            EXPECT_GT(msg["seq"].get<std::int64_t>(), last_seq);
            last_seq = msg["seq"].get<std::int64_t>();
            ++frames;
        } else if (msg["type"] == "error") {
            EXPECT_EQ(msg["code"], "malformed_json");
            saw_error = true;
        } else if (msg["type"] == "trial") {
            saw_trial = true;
        }
    }
    const auto log = server.get();
    EXPECT_TRUE(saw_error);
    EXPECT_TRUE(saw_trial);
    EXPECT_GE(frames, 1U);
    EXPECT_EQ(log.frames.size(), 40U);
    EXPECT_EQ(log.markers.size(), 1U);
}

TEST(Serve, BusyPortIsAnIoError) {
    namespace net = boost::asio;
    net::io_context ioc;
    net::ip::tcp::acceptor holder(ioc, {net::ip::make_address("127.0.0.1"), 0});
    ServeOptions opt;
    opt.port = holder.local_endpoint().port();
    EXPECT_THROW(serve(scripted_setup(), opt), IoError);
}

}  // namespace
}  // namespace arsafe::pipeline
