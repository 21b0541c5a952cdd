// arsafe: command line front end for calibration, simulation, evaluation and the frame service.

#include "arsafe/calib/horn.hpp"
#include "arsafe/calib/planar.hpp"
#include "arsafe/calib/pnp.hpp"
#include "arsafe/geom/io.hpp"
#include "arsafe/geom/json.hpp"
#include "arsafe/pipeline/calibration_session.hpp"
#include "arsafe/pipeline/metrics.hpp"
#include "arsafe/pipeline/service.hpp"
#include "arsafe/pipeline/session.hpp"
#include "arsafe/pipeline/study.hpp"
#include "arsafe/pipeline/timing.hpp"
#include "arsafe/recon/metrics.hpp"
#include "arsafe/recon/reconstruct.hpp"
#include "arsafe/registration/align.hpp"
#include "arsafe/sim/dataset.hpp"
#include "arsafe/sim/noise.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace arsafe;
using pipeline::SessionSetup;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string modality;
    std::string out = "out";
};

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError(p.string() + ": " + e.what());
    }
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
}

SessionSetup make_setup(const Common& c) {
    SessionSetup s = pipeline::default_setup();
    if (!c.config.empty()) {
        s.config = pipeline::load_config(c.config);
        if (!s.config.scene.empty()) s.scene = sim::scene_from_json(read_json(s.config.scene));
        if (!s.config.calibration.empty())
            s.calibration = pipeline::calibration_from_json(read_json(s.config.calibration));
    }
    if (c.seed) s.config.seed = *c.seed;
    if (!c.modality.empty()) s.config.modality = pipeline::modality_from_string(c.modality);
    s.config.validate();
    return s;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "pipeline config JSON")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "random seed");
    app->add_option("--modality", c.modality, "control or experiment")
        ->check(CLI::IsMember({"control", "experiment"}));
    app->add_option("--out", c.out, "output directory");
}

// Stacks equally sized rasters vertically so metrics pool over all frames.
template <class R>
R stack(const std::vector<R>& parts) {
    if (parts.empty()) throw InvalidArgument("no frames to evaluate");
    const int w = parts.front().width();
    int h = 0;
    for (const auto& p : parts) {
        if (p.width() != w) throw InvalidArgument("frames differ in width");
        h += p.height();
    }
    R out(w, h);
    int row = 0;
    for (const auto& p : parts) {
        for (int v = 0; v < p.height(); ++v)
            for (int u = 0; u < w; ++u) out(u, row + v) = p(u, v);
        row += p.height();
    }
    return out;
}

std::vector<sim::DatasetFrame> eval_frames(const SessionSetup& s, std::size_t n) {
    if (!s.config.dataset.empty() && fs::exists(s.config.dataset / recon::frame_dir_name(0)))
        return sim::import_dataset(s.config.dataset);
    return sim::render_dataset(s.scene, sim::lymphadenectomy_script(s.scene), n);
}

// Noise levels compared in the evaluation tables; the configured one comes first.
std::vector<std::pair<std::string, sim::NoiseSpec>> eval_variants(const SessionSetup& s) {
    std::vector<std::pair<std::string, sim::NoiseSpec>> v;
    v.emplace_back("configured", s.config.noise);
    sim::NoiseSpec light;
    light.disparity_sigma = 0.5;
    light.mask_jitter = 1;
    v.emplace_back("light", light);
    sim::NoiseSpec heavy;
    heavy.disparity_sigma = 1.5;
    heavy.disparity_step = 0.25;
    heavy.dropout = 0.05;
    heavy.mask_jitter = 3;
    heavy.blob_rate = 1.0;
    heavy.blob_size = 12;
    v.emplace_back("heavy", heavy);
    return v;
}

int cmd_calibrate(const Common& c, const std::string& inputs) {
    const fs::path out = c.out;
    if (inputs.empty()) {
        SessionSetup s = make_setup(c);
        pipeline::CalibrationSessionParams p;
        if (c.seed) p.seed = *c.seed;
        const auto r = pipeline::run_calibration_session(s, p);
        write_text(out / "calibration.json", pipeline::to_json(r.calibration).dump(2) + "\n");
        write_text(out / "calibration_report.json", pipeline::to_json(r).dump(2) + "\n");
        write_text(out / "calibration_report.txt", pipeline::format_error_table(r));
        std::cout << pipeline::format_error_table(r);
        return 0;
    }

    // Measured correspondences: chessboard corners per view, optional touched point pairs
    // and tip observations.
    const json j = read_json(inputs);
    calib::ChessboardSpec board;
    board.rows = j.at("board").at("rows");
    board.cols = j.at("board").at("cols");
    board.square_size = j.at("board").at("square_size");
    board.validate();
    const auto model = calib::chessboard_model(board);
    std::vector<calib::PlanarView> views;
    for (const auto& jv : j.at("views")) {
        calib::PlanarView v;
        v.object_points = model;
        for (const auto& px : jv) v.image_points.emplace_back(px.at(0).get<double>(), px.at(1).get<double>());
        v.validate();
        views.push_back(std::move(v));
    }
    const auto cam = calib::calibrate_camera(views, j.at("width"), j.at("height"));
    json result{{"intrinsics", cam.intrinsics}, {"e_cam_px", cam.final_error}};
    std::string table = "E_cam  " + std::to_string(cam.final_error) + " px\n";
    if (j.contains("hand_hand")) {
        calib::PointPairSet pairs{geom::points_from_json(j["hand_hand"].at("left")),
                                  geom::points_from_json(j["hand_hand"].at("right"))};
        const auto t = calib::hand_hand_calibrate(pairs);
        const double e = calib::hand_hand_error(pairs, t);
        result["ee1_to_ee2"] = t;
        result["e_hand_hand_m"] = e;
        table += "E_hand-hand  " + std::to_string(e * 1000.0) + " mm\n";
    }
    if (j.contains("hand_eye")) {
        calib::HandEyeSet set;
        set.ee_points = geom::points_from_json(j["hand_eye"].at("ee_points"));
        for (const auto& px : j["hand_eye"].at("image_points"))
            set.image_points.emplace_back(px.at(0).get<double>(), px.at(1).get<double>());
        calib::RansacParams rp;
        rp.inlier_px = 10.0;
        if (c.seed) rp.seed = *c.seed;
        const auto r = calib::hand_eye_calibrate(set, cam.intrinsics, rp);
        const double e = calib::hand_eye_error(set, r.pose, cam.intrinsics);
        result["ecm_to_cam"] = r.pose;
        result["e_hand_eye_px"] = e;
        result["hand_eye_inliers"] = r.inliers.size();
        table += "E_hand-eye  " + std::to_string(e) + " px\n";
    }
    write_text(out / "calibration.json", result.dump(2) + "\n");
    write_text(out / "calibration_report.txt", table);
    std::cout << table;
    return 0;
}

int cmd_simulate(const Common& c, std::size_t frames, double fps) {
    const SessionSetup s = make_setup(c);
    sim::LymphScriptParams lp;
    lp.seed = s.config.seed;
    const auto script = sim::lymphadenectomy_script(s.scene, lp);
    const std::size_t n = frames ? frames : static_cast<std::size_t>((script.end() - script.start()) * fps) + 1;
    sim::export_dataset(s.scene, script, n, c.out, 1.0 / fps);
    std::cout << "wrote " << n << " frames to " << c.out << "\n";
    return 0;
}

int cmd_run(const Common& c, std::size_t frames, std::size_t save_every) {
    SessionSetup s = make_setup(c);
    pipeline::SessionEngine engine(s);
    sim::LymphScriptParams lp;
    lp.seed = s.config.seed;
    engine.set_script(sim::lymphadenectomy_script(s.scene, lp));
    const fs::path out = c.out;
    fs::create_directories(out / "frames");
    std::vector<pipeline::TimingBreakdown> timing;
    while (!engine.script_done() && (frames == 0 || engine.seq() < frames)) {
        const auto r = engine.tick();
        if (!r.skipped) timing.push_back(r.timing);
        if (save_every && r.m % save_every == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "%06zu.png", r.m);
            const auto png = geom::encode_png(r.left);
            std::ofstream f(out / "frames" / name, std::ios::binary);
            f.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
        }
    }
    pipeline::write_session(out / "session.jsonl", engine.log());
    std::cout << engine.seq() << " frames, modality " << pipeline::to_string(s.config.modality) << "\n";
    if (timing.size() >= 2) {
        const auto table = pipeline::format_timing_table(pipeline::timing_report(timing));
        write_text(out / "timing.txt", table);
        std::cout << table;
    }
    const auto m = pipeline::metrics_json(engine.log());
    std::cout << m.dump(2) << "\n";
    return 0;
}

int cmd_eval_depth(const Common& c, std::size_t frames) {
    const SessionSetup s = make_setup(c);
    const auto data = eval_frames(s, frames);
    std::vector<std::pair<std::string, recon::DepthEvalReport>> rows;
    std::vector<geom::DepthMap> gts;
    for (const auto& f : data) gts.push_back(f.depth_gt);
    const auto gt = stack(gts);
    for (const auto& [name, spec] : eval_variants(s)) {
        std::vector<geom::DepthMap> preds;
        Rng rng(s.config.seed);
        for (const auto& f : data) {
            const auto& rect = f.rig.rect();
            const auto disp = sim::apply_disparity_noise(f.disp_gt, spec, rng);
            preds.push_back(recon::disparity_to_depth(disp, f.rig.baseline(), rect.focal));
        }
        rows.emplace_back(name, recon::depth_metrics(stack(preds), gt));
    }
    const auto table = recon::format_depth_table(rows);
    json j = json::object();
    for (const auto& [name, r] : rows) j[name] = recon::to_json(r);
    write_text(fs::path(c.out) / "depth_eval.txt", table);
    write_text(fs::path(c.out) / "depth_eval.json", j.dump(2) + "\n");
    std::cout << table;
    return 0;
}

int cmd_eval_seg(const Common& c, std::size_t frames) {
    const SessionSetup s = make_setup(c);
    const auto data = eval_frames(s, frames);
    std::vector<geom::BinaryMask> gts;
    for (const auto& f : data) gts.push_back(f.mask_gt);
    const auto gt = stack(gts);
    std::vector<std::pair<std::string, recon::SegEvalReport>> rows;
    for (const auto& [name, spec] : eval_variants(s)) {
        std::vector<geom::BinaryMask> preds;
        Rng rng(s.config.seed);
        for (const auto& f : data) preds.push_back(sim::apply_mask_noise(f.mask_gt, spec, rng));
        rows.emplace_back(name, recon::seg_metrics(stack(preds), gt));
        std::vector<geom::BinaryMask> post;
        for (const auto& p : preds) post.push_back(recon::postprocess_mask(p, s.config.post));
        rows.emplace_back(name + "+post", recon::seg_metrics(stack(post), gt));
    }
    const auto table = recon::format_seg_table(rows);
    json j = json::object();
    for (const auto& [name, r] : rows) j[name] = recon::to_json(r);
    write_text(fs::path(c.out) / "seg_eval.txt", table);
    write_text(fs::path(c.out) / "seg_eval.json", j.dump(2) + "\n");
    std::cout << table;
    return 0;
}

int cmd_register(const Common& c, std::size_t frames) {
    const SessionSetup s = make_setup(c);
    pipeline::SessionEngine engine(s);
    sim::LymphScriptParams lp;
    lp.seed = s.config.seed;
    engine.set_script(sim::lymphadenectomy_script(s.scene, lp));
    json out = json::array();
    for (std::size_t i = 0; i < frames && !engine.script_done(); ++i) {
        const auto r = engine.tick();
        json row{{"m", r.m}, {"cloud_points", r.cloud_points}, {"events", r.events}};
        if (r.icp) row["icp"] = registration::to_json(*r.icp);
        if (engine.pipeline().registered()) {
            const auto& est = engine.pipeline().registration();
            const auto delta = geom::compose(est, s.bl_to_ecm.inverse());
            row["rotation_error_deg"] = geom::rotation_angle(delta.rotation()) * 180.0 / 3.14159265358979323846;
            row["translation_error_m"] = (est.translation() - s.bl_to_ecm.translation()).norm();
            row["e_regis_m"] = registration::registration_error(engine.pipeline().preop_cloud(),
                                                                engine.pipeline().last_cloud(), est);
        }
        out.push_back(row);
        std::cout << row.dump() << "\n";
    }
    write_text(fs::path(c.out) / "registration.json", out.dump(2) + "\n");
    return 0;
}

int cmd_report(const Common& c, const std::vector<std::string>& logs, bool study, std::size_t subjects) {
    std::vector<pipeline::SessionLog> control, experiment;
    if (study) {
        const SessionSetup s = make_setup(c);
        pipeline::StudyParams p;
        p.subjects = subjects;
        if (c.seed) p.seed = *c.seed;
        auto r = pipeline::run_study(s.scene, p);
        control = std::move(r.control);
        experiment = std::move(r.experiment);
        fs::create_directories(fs::path(c.out) / "logs");
        for (const auto& l : control) pipeline::write_session(fs::path(c.out) / "logs" / (l.subject + "_control.jsonl"), l);
        for (const auto& l : experiment)
            pipeline::write_session(fs::path(c.out) / "logs" / (l.subject + "_experiment.jsonl"), l);
    }
    for (const auto& p : logs) {
        auto l = pipeline::read_session(p);
        (l.modality == pipeline::Modality::Control ? control : experiment).push_back(std::move(l));
    }
    const auto report = pipeline::compare_modalities(control, experiment);
    const auto table = pipeline::format_report(report);
    write_text(fs::path(c.out) / "report.txt", table);
    write_text(fs::path(c.out) / "report.json", pipeline::to_json(report).dump(2) + "\n");
    std::cout << table;
    return 0;
}

std::atomic<bool> g_stop{false};

int cmd_serve(const Common& c, std::optional<int> port, const std::string& address, std::size_t max_ticks,
              bool no_images, bool fast) {
    const SessionSetup s = make_setup(c);
    pipeline::ServeOptions o;
    o.address = address;
    o.port = port ? *port : s.config.port;
    o.max_ticks = max_ticks;
    o.images = !no_images;
    o.realtime = !fast;
    o.log_path = fs::path(c.out) / "session.jsonl";
    o.inputs_path = fs::path(c.out) / "inputs.jsonl";
    o.stop = &g_stop;
    o.on_listening = [&](int p) { std::cout << "listening on ws://" << address << ":" << p << std::endl; };
    std::signal(SIGINT, [](int) { g_stop = true; });
    std::signal(SIGTERM, [](int) { g_stop = true; });
    fs::create_directories(c.out);
    const auto log = pipeline::serve(s, o);
    std::cout << log.frames.size() << " frames logged to " << o.log_path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"arsafe: AR proximity guidance pipeline"};
    app.require_subcommand(1);

    Common c;
    std::size_t frames = 0;
    std::size_t save_every = 30;
    double fps = 30.0;
    std::string inputs;
    std::vector<std::string> logs;
    bool study = false;
    std::size_t subjects = 10;
    std::optional<int> port;
    std::string address = "127.0.0.1";
    std::size_t max_ticks = 0;
    bool no_images = false;
    bool fast = false;

    auto* calibrate = app.add_subcommand("calibrate", "camera, hand-hand and hand-eye calibration");
    add_common(calibrate, c);
    calibrate->add_option("--inputs", inputs, "measured correspondences JSON; simulated when omitted")
        ->check(CLI::ExistingFile);

    auto* simulate = app.add_subcommand("simulate", "render the scripted scene to a dataset");
    add_common(simulate, c);
    simulate->add_option("--frames", frames, "frame count (default: whole script)");
    simulate->add_option("--fps", fps, "frame rate")->check(CLI::PositiveNumber);

    auto* run = app.add_subcommand("run", "scripted session: session log, timing and overlaid frames");
    add_common(run, c);
    run->add_option("--frames", frames, "stop after this many frames (default: whole script)");
    run->add_option("--save-every", save_every, "write every n-th overlaid frame (0: none)");

    auto* eval_depth = app.add_subcommand("eval-depth", "depth accuracy table");
    add_common(eval_depth, c);
    std::size_t eval_n = 20;
    eval_depth->add_option("--frames", eval_n, "frames rendered when no dataset is configured");

    auto* eval_seg = app.add_subcommand("eval-seg", "segmentation table");
    add_common(eval_seg, c);
    eval_seg->add_option("--frames", eval_n, "frames rendered when no dataset is configured");

    auto* reg = app.add_subcommand("register", "registration diagnostics over the first frames");
    add_common(reg, c);
    std::size_t reg_n = 5;
    reg->add_option("--frames", reg_n, "frames to process");

    auto* report = app.add_subcommand("report", "Control vs Experiment comparison from session logs");
    add_common(report, c);
    report->add_option("logs", logs, "session JSONL files")->check(CLI::ExistingFile);
    report->add_flag("--study", study, "simulate the participants first");
    report->add_option("--subjects", subjects, "simulated participants")->check(CLI::PositiveNumber);

    auto* serve = app.add_subcommand("serve", "interactive WebSocket frame service");
    add_common(serve, c);
    serve->add_option("--port", port, "listen port (default from config)");
    serve->add_option("--address", address, "listen address");
    serve->add_option("--max-ticks", max_ticks, "stop after this many frames (0: unlimited)");
    serve->add_flag("--no-images", no_images, "omit PNG payloads");
    serve->add_flag("--fast", fast, "tick as fast as processing allows");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*calibrate) return cmd_calibrate(c, inputs);
        if (*simulate) return cmd_simulate(c, frames, fps);
        if (*run) return cmd_run(c, frames, save_every);
        if (*eval_depth) return cmd_eval_depth(c, eval_n);
        if (*eval_seg) return cmd_eval_seg(c, eval_n);
        if (*reg) return cmd_register(c, reg_n);
        if (*report) {
            if (logs.empty() && !study) {
                std::cerr << "report: give session logs or --study\n";
                return 2;
            }
            return cmd_report(c, logs, study, subjects);
        }
        if (*serve) return cmd_serve(c, port, address, max_ticks, no_images, fast);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
