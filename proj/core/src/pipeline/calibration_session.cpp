#include "arsafe/pipeline/calibration_session.hpp"

#include "arsafe/calib/horn.hpp"
#include "arsafe/calib/pnp.hpp"
#include "arsafe/geom/json.hpp"
#include "arsafe/random.hpp"
#include "arsafe/registration/align.hpp"
#include "arsafe/registration/features.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <cstdio>
#include <numeric>

namespace arsafe::pipeline {

using nlohmann::json;
using geom::Vec2;

void CalibrationSessionParams::validate() const {
    board.validate();
    if (!(pixel_sigma >= 0.0) || !(ee_noise >= 0.0)) throw InvalidArgument("noise levels must be >= 0");
    if (views < 3) throw InvalidArgument("camera calibration needs at least 3 views");
    if (!(board_depth_min > 0.0 && board_depth_max >= board_depth_min)) throw InvalidArgument("bad board depth range");
    if (hand_hand_points < 3) throw InvalidArgument("arm-to-arm calibration needs at least 3 points");
    if (hand_eye_points < 6) throw InvalidArgument("arm-to-camera calibration needs at least 6 points");
    if (!(hand_eye_depth_min > 0.0 && hand_eye_depth_max >= hand_eye_depth_min)) {
        throw InvalidArgument("bad tip depth range");
    }
    if (regis_frames < 2) throw InvalidArgument("registration error needs at least 2 frames");
}

ErrorStat error_stat(std::vector<double> samples) {
    if (samples.empty()) throw InvalidArgument("no error samples");
    ErrorStat s;
    const double n = static_cast<double>(samples.size());
    s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double x : samples) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / (n - 1.0));
    }
    s.samples = std::move(samples);
    return s;
}

namespace {

Vec3 isotropic(Rng& rng, double rms) {
    const double sigma = rms / std::sqrt(3.0);
    return Vec3(sigma * normal(rng), sigma * normal(rng), sigma * normal(rng));
}

geom::Mat3 random_rotation(Rng& rng, double max_tilt) {
    const double ax = uniform(rng, -max_tilt, max_tilt);
    const double ay = uniform(rng, -max_tilt, max_tilt);
    const double az = uniform(rng, -3.14159, 3.14159);
    return (Eigen::AngleAxisd(az, Vec3::UnitZ()) * Eigen::AngleAxisd(ay, Vec3::UnitY()) *
            Eigen::AngleAxisd(ax, Vec3::UnitX()))
        .toRotationMatrix();
}

}  // namespace

CalibrationSessionReport run_calibration_session(const SessionSetup& setup, const CalibrationSessionParams& p) {
    p.validate();
    CalibrationSessionReport rep;
    const auto& k_true = setup.scene.rig.left;
    const int w = k_true.width, h = k_true.height;
    auto inside = [&](const Vec2& px, double margin) {
        return px.x() >= margin && px.y() >= margin && px.x() <= w - 1 - margin && px.y() <= h - 1 - margin;
    };

    // Camera: chessboard views with pixel noise.
    {
        auto rng = make_rng(p.seed, 0);
        const auto model = calib::chessboard_model(p.board);
        Vec3 centre = Vec3::Zero();
        for (const auto& q : model) centre += q;
        centre /= static_cast<double>(model.size());
        std::vector<calib::PlanarView> views;
        int attempts = 0;
        while (static_cast<int>(views.size()) < p.views) {
            if (++attempts > 100 * p.views) throw DegenerateInput("could not place the calibration board in view");
            const geom::Mat3 r = random_rotation(rng, 0.5);
            const double z = uniform(rng, p.board_depth_min, p.board_depth_max);
            const Vec3 c(uniform(rng, -0.2, 0.2) * z, uniform(rng, -0.1, 0.1) * z, z);
            const RigidTransform pose(r, c - r * centre, FrameId::Board, FrameId::L_CAM);
            calib::PlanarView v;
            bool ok = true;
            for (const auto& q : model) {
                const auto px = geom::project_point(k_true, pose.apply(q));
                if (!px || !inside(*px, 5.0)) {
                    ok = false;
                    break;
                }
                v.object_points.push_back(q);
                v.image_points.push_back(*px + Vec2(p.pixel_sigma * normal(rng), p.pixel_sigma * normal(rng)));
            }
            if (ok) views.push_back(std::move(v));
        }
        const auto cal = calib::calibrate_camera(views, w, h);
        rep.intrinsics = cal.intrinsics;
        std::vector<double> per_view;
        for (std::size_t i = 0; i < views.size(); ++i) {
            const auto e = calib::reprojection_errors(views[i].object_points, views[i].image_points, cal.intrinsics,
                                                      cal.poses[i]);
            double ss = 0.0;
            for (double x : e) ss += x * x;
            per_view.push_back(std::sqrt(ss / static_cast<double>(e.size())));
        }
        rep.e_cam = error_stat(std::move(per_view));
    }

    // Arm to arm: both tips touch the same points; each reading carries kinematic error.
    RigidTransform ee1_to_ee2 = setup.ee1_to_ee2;
    {
        auto rng = make_rng(p.seed, 1);
        const auto ecm_to_ee2 = setup.ee2_to_ecm.inverse();
        const auto ee2_to_ee1 = setup.ee1_to_ee2.inverse();
        calib::PointPairSet pairs;
        for (std::size_t i = 0; i < p.hand_hand_points; ++i) {
            const Vec3 ecm(uniform(rng, -0.05, 0.05), uniform(rng, -0.03, 0.03), uniform(rng, 0.07, 0.11));
            const Vec3 in_ee2 = ecm_to_ee2.apply(ecm);
            pairs.left.push_back(in_ee2 + isotropic(rng, p.ee_noise));
            pairs.right.push_back(ee2_to_ee1.apply(in_ee2) + isotropic(rng, p.ee_noise));
        }
        ee1_to_ee2 = calib::hand_hand_calibrate(pairs);
        std::vector<double> e;
        for (std::size_t i = 0; i < pairs.left.size(); ++i) {
            e.push_back((pairs.left[i] - ee1_to_ee2.apply(pairs.right[i])).norm());
        }
        rep.e_hand_hand = error_stat(std::move(e));
    }

    // Arm to camera: tip positions from kinematics against where the tip is seen.
    RigidTransform ecm_to_cam = setup.scene.ecm_to_cam;
    {
        auto rng = make_rng(p.seed, 2);
        const auto cam_to_ecm = setup.scene.ecm_to_cam.inverse();
        calib::HandEyeSet set;
        while (set.ee_points.size() < p.hand_eye_points) {
            const double z = uniform(rng, p.hand_eye_depth_min, p.hand_eye_depth_max);
            const Vec3 cam(uniform(rng, -0.4, 0.4) * z, uniform(rng, -0.22, 0.22) * z, z);
            const auto px = geom::project_point(k_true, cam);
            if (!px || !inside(*px, 2.0)) continue;
            set.ee_points.push_back(cam_to_ecm.apply(cam) + isotropic(rng, p.ee_noise));
            set.image_points.push_back(*px + Vec2(p.pixel_sigma * normal(rng), p.pixel_sigma * normal(rng)));
        }
        calib::RansacParams rp;
        rp.inlier_px = 10.0;
        rp.seed = p.seed;
        ecm_to_cam = calib::hand_eye_calibrate(set, rep.intrinsics, rp).pose;
        rep.e_hand_eye = error_stat(calib::reprojection_errors(set.ee_points, set.image_points, rep.intrinsics, ecm_to_cam));
    }

    rep.calibration = make_calibration(setup.scene.rig, ecm_to_cam, ee1_to_ee2, setup.ee2_to_ecm);

    // Registration error on a noisy pipeline session run with the estimated calibration.
    {
        SessionSetup s = setup;
        s.calibration = rep.calibration;
        s.config.provider = ProviderKind::Noisy;
        s.config.seed = p.seed;
        s.config.noise.disparity_sigma = p.pixel_sigma;
        s.config.modality = Modality::Control;
        SessionEngine engine(s);
        engine.set_script(sim::lymphadenectomy_script(s.scene));
        const auto pre = registration::voxel_downsample(engine.pipeline().preop_cloud(), 0.001);
        std::vector<double> e;
        for (std::size_t i = 0; i < p.regis_frames; ++i) {
            engine.tick();
            if (!engine.pipeline().registered() || engine.pipeline().last_cloud().empty()) continue;
            e.push_back(registration::registration_error(pre, engine.pipeline().last_cloud(),
                                                         engine.pipeline().registration()));
        }
        rep.e_regis = error_stat(std::move(e));
    }
    return rep;
}

std::string format_error_table(const CalibrationSessionReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%-14s %-22s\n%-14s %.2f±%.2f (pixel)\n%-14s %.2f±%.2f (cm)\n%-14s %.2f±%.2f (pixel)\n"
                  "%-14s %.4f±%.4f (cm)\n",
                  "Error", "Mean±Std", "E_cam", r.e_cam.mean, r.e_cam.std, "E_hand_hand", 100.0 * r.e_hand_hand.mean,
                  100.0 * r.e_hand_hand.std, "E_hand_eye", r.e_hand_eye.mean, r.e_hand_eye.std, "E_regis",
                  100.0 * r.e_regis.mean, 100.0 * r.e_regis.std);
    return buf;
}

json to_json(const CalibrationSessionReport& r) {
    auto stat = [](const ErrorStat& s, const char* unit) {
        return json{{"mean", s.mean}, {"std", s.std}, {"unit", unit}, {"n", s.samples.size()}};
    };
    return {{"e_cam", stat(r.e_cam, "px")},
            {"e_hand_hand", stat(r.e_hand_hand, "m")},
            {"e_hand_eye", stat(r.e_hand_eye, "px")},
            {"e_regis", stat(r.e_regis, "m")},
            {"intrinsics", json(r.intrinsics)},
            {"calibration", to_json(r.calibration)}};
}

}  // namespace arsafe::pipeline
