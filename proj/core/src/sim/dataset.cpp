#include "arsafe/sim/dataset.hpp"

#include "arsafe/geom/io.hpp"
#include "arsafe/geom/json.hpp"
#include "arsafe/geom/resample.hpp"
#include "arsafe/recon/providers.hpp"

#include <algorithm>

namespace arsafe::sim {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<DatasetFrame> render_dataset(const SceneConfig& scene, const TrajectoryScript& script, std::size_t n_frames,
                                         double dt) {
    scene.validate();
    script.validate();
    if (!(dt > 0.0)) throw InvalidArgument("frame interval must be positive");
    std::vector<DatasetFrame> frames;
    frames.reserve(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        DatasetFrame f;
        f.index = i;
        f.t = std::min(script.start() + static_cast<double>(i) * dt, script.end());
        f.state = scene_state(evaluate_script(script, f.t, scene.nodes.centers.size()));
        const auto views = render_views(scene, f.state);
        f.left = geom::to_gray(views.rgb_l);
        f.right = geom::to_gray(views.rgb_r);
        f.disp_gt = geom::quantize_f32(views.disp_gt);
        f.depth_gt = geom::quantize_f32(views.depth_gt);
        f.mask_gt = views.mask_gt;
        f.rig = scene.rig;
        f.ecm_to_cam = scene.ecm_to_cam;
        frames.push_back(std::move(f));
    }
    return frames;
}

void write_frame(const fs::path& root, const DatasetFrame& frame) {
    const fs::path dir = root / recon::frame_dir_name(frame.index);
    fs::create_directories(dir);
    geom::write_pgm(dir / "left.pgm", frame.left);
    geom::write_pgm(dir / "right.pgm", frame.right);
    geom::write_pfm(dir / "disp_gt.pfm", frame.disp_gt);
    geom::write_pfm(dir / "depth_gt.pfm", frame.depth_gt);
    geom::write_pgm(dir / "mask_gt.pgm", frame.mask_gt);
    json inst = json::array();
    for (const auto& m : frame.state.instruments) {
        inst.push_back({{"ee_m", geom::vec_to_json(m.ee)}, {"rcm_m", geom::vec_to_json(m.rcm)}, {"radius_m", m.radius}});
    }
    const json j{{"index", frame.index},
                 {"t_s", frame.t},
                 {"rig", json(frame.rig)},
                 {"ecm_to_cam", json(frame.ecm_to_cam)},
                 {"instruments_ecm", inst},
                 {"node_present", frame.state.node_present}};
    geom::write_json(dir / "rig.json", j);
}

DatasetFrame read_frame(const fs::path& root, std::size_t index) {
    const fs::path dir = root / recon::frame_dir_name(index);
    if (!fs::is_directory(dir)) throw IoError(dir.string() + ": frame directory missing");
    DatasetFrame f;
    f.index = index;
    f.left = geom::read_pgm(dir / "left.pgm");
    f.right = geom::read_pgm(dir / "right.pgm");
    f.disp_gt = geom::read_pfm(dir / "disp_gt.pfm");
    f.depth_gt = geom::read_pfm(dir / "depth_gt.pfm");
    f.mask_gt = geom::read_pgm(dir / "mask_gt.pgm");
    const fs::path rig_path = dir / "rig.json";
    const json j = geom::read_json(rig_path);
    try {
        if (j.at("index").get<std::size_t>() != index) throw IoError(rig_path.string() + ": index does not match directory");
        f.t = j.at("t_s").get<double>();
        f.rig = geom::rig_from_json(j.at("rig"));
        f.ecm_to_cam = geom::transform_from_json(j.at("ecm_to_cam"));
        for (const auto& m : j.at("instruments_ecm")) {
            proximity::InstrumentModel im;
            im.ee = geom::vec_from_json(m.at("ee_m"));
            im.rcm = geom::vec_from_json(m.at("rcm_m"));
            im.radius = m.at("radius_m").get<double>();
            f.state.instruments.push_back(im);
        }
        f.state.node_present = j.at("node_present").get<std::vector<std::uint8_t>>();
    } catch (const json::exception& e) {
        throw IoError(rig_path.string() + ": " + e.what());
    }
    const bool same = f.left.same_shape(f.right) && f.disp_gt.width() == f.left.width() &&
                      f.disp_gt.height() == f.left.height() && f.depth_gt.width() == f.left.width() &&
                      f.depth_gt.height() == f.left.height() && f.left.same_shape(f.mask_gt);
    if (!same) throw IoError(dir.string() + ": rasters differ in size");
    return f;
}

std::vector<DatasetFrame> export_dataset(const SceneConfig& scene, const TrajectoryScript& script, std::size_t n_frames,
                                         const fs::path& dir, double dt) {
    auto frames = render_dataset(scene, script, n_frames, dt);
    fs::create_directories(dir);
    for (const auto& f : frames) write_frame(dir, f);
    geom::write_json(dir / "dataset.json",
                     json{{"frames", n_frames}, {"dt_s", dt}, {"scene", json(scene)}, {"script", json(script)}});
    return frames;
}

std::vector<DatasetFrame> import_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + ": dataset directory missing");
    std::vector<DatasetFrame> frames;
    for (std::size_t i = 0; fs::is_directory(dir / recon::frame_dir_name(i)); ++i) frames.push_back(read_frame(dir, i));
    return frames;
}

}  // namespace arsafe::sim
