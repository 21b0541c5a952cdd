#include "arsafe/calib/horn.hpp"
#include "arsafe/calib/planar.hpp"
#include "arsafe/calib/pnp.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace arsafe;
using namespace arsafe::calib;
using arsafe::testing::gaussian;
using arsafe::testing::random_transform;
using arsafe::testing::random_vec;
using arsafe::testing::rotation_error;
using geom::make_intrinsics;
using geom::project_point;

namespace {

CameraIntrinsics demo_k() { return make_intrinsics(800, 800, 320, 180, 640, 360); }

// Board pose looking at the camera from ~0.3 m with the given tilts (radians).
RigidTransform board_pose(double tilt_x, double tilt_y, double spin, const Vec3& offset) {
    const geom::Mat3 r = (Eigen::AngleAxisd(spin, Vec3::UnitZ()) * Eigen::AngleAxisd(tilt_y, Vec3::UnitY()) *
                          Eigen::AngleAxisd(tilt_x, Vec3::UnitX()))
                             .toRotationMatrix();
    const Vec3 center(0.025, 0.04, 0.0);
    return RigidTransform(r, offset - r * center, FrameId::Board, FrameId::L_CAM);
}

std::vector<RigidTransform> five_poses() {
    return {board_pose(0.35, 0.0, 0.1, Vec3(0, 0, 0.3)), board_pose(-0.3, 0.25, -0.2, Vec3(0.01, -0.01, 0.28)),
            board_pose(0.1, -0.4, 0.3, Vec3(-0.02, 0.01, 0.32)), board_pose(-0.25, -0.2, 1.2, Vec3(0.0, 0.02, 0.35)),
            board_pose(0.4, 0.3, -0.9, Vec3(0.015, 0.0, 0.3))};
}

std::vector<PlanarView> synth_views(const CameraIntrinsics& k, const std::vector<RigidTransform>& poses,
                                    double pixel_sigma = 0.0, std::uint64_t seed = 0) {
    Rng rng = make_rng(seed);
    const auto model = chessboard_model({});
    std::vector<PlanarView> views;
    for (const auto& pose : poses) {
        PlanarView v;
        v.object_points = model;
        for (const auto& p : model) {
            Vec2 px = *project_point(k, pose.apply(p));
            px += Vec2(gaussian(rng), gaussian(rng)) * pixel_sigma;
            v.image_points.push_back(px);
        }
        views.push_back(v);
    }
    return views;
}

}  // namespace

TEST(Chessboard, DefaultGridShape) {
    const auto pts = chessboard_model({9, 6, 0.01});
    ASSERT_EQ(pts.size(), 54u);
    EXPECT_EQ(pts.front(), Vec3(0, 0, 0));
    EXPECT_NEAR((pts.back() - Vec3(0.05, 0.08, 0)).norm(), 0.0, 1e-15);
}

TEST(Chessboard, UnitSquareGrid) {
    const auto pts = chessboard_model({3, 3, 1.0});
    ASSERT_EQ(pts.size(), 9u);
    EXPECT_EQ(pts[8], Vec3(2, 2, 0));
}

TEST(Chessboard, CountIsRowsTimesCols) {
    for (int r = 3; r < 8; ++r)
        for (int c = 3; c < 8; ++c) EXPECT_EQ(chessboard_model({r, c, 0.02}).size(), static_cast<std::size_t>(r * c));
    EXPECT_THROW(chessboard_model({2, 5, 0.01}), InvalidArgument);
}

TEST(Homography, IdentityMapping) {
    const std::vector<Vec2> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.2}};
    const auto h = estimate_homography(pts, pts);
    EXPECT_LT((h - geom::Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Homography, NoiselessReprojection) {
    const auto k = demo_k();
    const auto pose = five_poses()[1];
    const auto views = synth_views(k, {pose});
    const auto h = estimate_homography(views[0]);
    double worst = 0.0;
    for (std::size_t i = 0; i < views[0].object_points.size(); ++i) {
        const Vec3 x = h * Vec3(views[0].object_points[i].x(), views[0].object_points[i].y(), 1.0);
        worst = std::max(worst, (x.hnormalized() - views[0].image_points[i]).norm());
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Homography, RejectsThreePoints) {
    const std::vector<Vec2> pts{{0, 0}, {1, 0}, {1, 1}};
    EXPECT_THROW(estimate_homography(pts, pts), InvalidArgument);
    const std::vector<Vec2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    EXPECT_THROW(estimate_homography(line, line), DegenerateInput);
}

TEST(Zhang, RecoversIntrinsicsFromFiveViews) {
    const auto k = demo_k();
    const auto views = synth_views(k, five_poses());
    std::vector<geom::Mat3> hs;
    for (const auto& v : views) hs.push_back(estimate_homography(v));
    const auto est = zhang_intrinsics(hs, 640, 360);
    EXPECT_NEAR(est.fx, 800, 0.8);
    EXPECT_NEAR(est.fy, 800, 0.8);
    EXPECT_NEAR(est.cx, 320, 0.32);
    EXPECT_NEAR(est.cy, 180, 0.18);
}

TEST(Zhang, RejectsTwoViews) {
    const auto views = synth_views(demo_k(), {five_poses()[0], five_poses()[1]});
    std::vector<geom::Mat3> hs;
    for (const auto& v : views) hs.push_back(estimate_homography(v));
    EXPECT_THROW(zhang_intrinsics(hs, 640, 360), InvalidArgument);
}

TEST(Refine, RecoversRadialDistortion) {
    auto k = demo_k();
    k.distortion[0] = -0.15;
    const auto views = synth_views(k, five_poses());
    const auto res = calibrate_camera(views, 640, 360);
    EXPECT_NEAR(res.intrinsics.k1(), -0.15, 1e-3);
    EXPECT_NEAR(res.intrinsics.fx, 800, 1e-3);
    EXPECT_LT(res.final_error, 1e-6);
    EXPECT_LE(res.final_error, res.initial_error);
}

TEST(Refine, OptimalInputIsFixedPoint) {
    const auto k = demo_k();
    auto views = synth_views(k, five_poses());
    const auto poses = five_poses();
    for (std::size_t i = 0; i < views.size(); ++i) views[i].pose = poses[i];
    const auto res = refine_calibration(k, views);
    EXPECT_NEAR(res.intrinsics.fx, k.fx, 1e-9);
    EXPECT_NEAR(res.intrinsics.fy, k.fy, 1e-9);
    EXPECT_NEAR(res.intrinsics.cx, k.cx, 1e-9);
    EXPECT_NEAR(res.intrinsics.cy, k.cy, 1e-9);
    EXPECT_NEAR(res.intrinsics.k1(), 0.0, 1e-9);
    EXPECT_NEAR(res.intrinsics.k2(), 0.0, 1e-9);
}

TEST(Refine, ErrorMonotoneAcrossAcceptedSteps) {
    const auto views = synth_views(demo_k(), five_poses(), 0.5, 3);
    const auto res = calibrate_camera(views, 640, 360);
    ASSERT_GE(res.error_history.size(), 2u);
    for (std::size_t i = 1; i < res.error_history.size(); ++i) EXPECT_LE(res.error_history[i], res.error_history[i - 1]);
}

TEST(CameraError, ZeroForExactProjection) {
    const auto k = demo_k();
    auto views = synth_views(k, five_poses());
    EXPECT_LT(camera_reprojection_error(views, k), 1e-9);
}

TEST(CameraError, ThreeFourFive) {
    const std::vector<Vec2> a{{10, 10}};
    const std::vector<Vec2> b{{13, 14}};
    EXPECT_DOUBLE_EQ(rms_pixel_error(a, b), 5.0);
}

TEST(CameraError, HalfPixelNoiseLandsInBand) {
    const auto views = synth_views(demo_k(), five_poses(), 0.5, 21);
    const auto res = calibrate_camera(views, 640, 360);
    EXPECT_GE(res.final_error, 0.3);
    EXPECT_LE(res.final_error, 0.9);
}

TEST(Horn, IdentityForEqualSets) {
    Rng rng = make_rng(30);
    std::vector<Vec3> p;
    for (int i = 0; i < 10; ++i) p.push_back(random_vec(rng, -0.1, 0.1));
    const auto t = horn_align(p, p, FrameId::EE1, FrameId::EE2);
    EXPECT_LT(geom::rotation_angle(t.rotation()), 1e-9);
    EXPECT_LT(t.translation().norm(), 1e-12);
}

TEST(Horn, RecoversPlantedTransformFromFortyPoints) {
    Rng rng = make_rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const auto truth = random_transform(rng, FrameId::EE1, FrameId::EE2);
        std::vector<Vec3> p, q;
        for (int i = 0; i < 40; ++i) {
            p.push_back(random_vec(rng, -0.1, 0.1));
            q.push_back(truth.apply(p.back()));
        }
        const auto t = horn_align(p, q, FrameId::EE1, FrameId::EE2);
        EXPECT_LT((t.rotation() - truth.rotation()).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((t.translation() - truth.translation()).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Horn, NoisyResidualWithinBand) {
    // Isotropic noise whose RMS displacement is sigma.
    Rng rng = make_rng(32);
    const double sigma = 0.0005;
    const double per_axis = sigma / std::sqrt(3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto truth = random_transform(rng, FrameId::EE1, FrameId::EE2);
        std::vector<Vec3> p, q;
        for (int i = 0; i < 40; ++i) {
            p.push_back(random_vec(rng, -0.05, 0.05));
            q.push_back(truth.apply(p.back()) + Vec3(gaussian(rng), gaussian(rng), gaussian(rng)) * per_axis);
        }
        const auto t = horn_align(p, q, FrameId::EE1, FrameId::EE2);
        const double rms = rms_point_error(p, q, t);
        EXPECT_GE(rms, 0.5 * sigma);
        EXPECT_LE(rms, 2.0 * sigma);
    }
}

TEST(Horn, InvariantToGlobalRigidMotion) {
    Rng rng = make_rng(33);
    const auto tpq = random_transform(rng, FrameId::EE1, FrameId::EE2);
    const auto g = random_transform(rng, FrameId::EE1, FrameId::EE1);
    std::vector<Vec3> p, q, gp, gq;
    for (int i = 0; i < 30; ++i) {
        p.push_back(random_vec(rng, -0.1, 0.1));
        q.push_back(tpq.apply(p.back()) + random_vec(rng, -1e-3, 1e-3));
        gp.push_back(g.apply(p.back()));
        gq.push_back(g.apply(q.back()));
    }
    const auto t = horn_align(p, q, FrameId::EE1, FrameId::EE2);
    const auto tg = horn_align(gp, gq, FrameId::EE1, FrameId::EE2);
    const geom::Mat4 expected = g.matrix() * t.matrix() * g.matrix().inverse();
    EXPECT_LT((tg.matrix() - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Horn, RejectsCollinearAndAcceptsCoplanar) {
    std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    EXPECT_THROW(horn_align(line, line, FrameId::EE1, FrameId::EE2), DegenerateInput);
    const auto board = chessboard_model({});
    EXPECT_NO_THROW(horn_align(board, board, FrameId::EE1, FrameId::EE2));
    std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
    EXPECT_THROW(horn_align(two, two, FrameId::EE1, FrameId::EE2), InvalidArgument);
}

TEST(HandHand, ExactIsZeroAndOneMillimeterOffset) {
    PointPairSet pairs{{Vec3(0.1, 0, 0)}, {Vec3(0.1, 0, 0)}};
    const RigidTransform id(FrameId::EE1, FrameId::EE2);
    EXPECT_EQ(hand_hand_error(pairs, id), 0.0);
    pairs.left[0].z() += 0.001;
    EXPECT_NEAR(hand_hand_error(pairs, id), 0.001, 1e-15);
    EXPECT_THROW(hand_hand_error(pairs, RigidTransform(FrameId::EE2, FrameId::EE1)), FrameMismatch);
}

TEST(Pnp, NoiselessChessboardPose) {
    const auto k = demo_k();
    const auto model = chessboard_model({});
    for (const auto& pose : five_poses()) {
        std::vector<Vec2> img;
        for (const auto& p : model) img.push_back(*project_point(k, pose.apply(p)));
        const auto est = solve_pnp(model, img, k);
        EXPECT_LT(rotation_error(est.rotation(), pose.rotation()), 1e-6);
        EXPECT_LT((est.translation() - pose.translation()).norm(), 1e-6);
    }
}

TEST(Pnp, GeneralPointsUseDlt) {
    auto k = demo_k();
    k.distortion = {-0.1, 0.02, 0, 0, 0};
    Rng rng = make_rng(40);
    const auto pose = random_transform(rng, FrameId::ECM, FrameId::L_CAM, 0.5, 0.0);
    const RigidTransform shifted(pose.rotation(), Vec3(0.01, -0.005, 0.0), FrameId::ECM, FrameId::L_CAM);
    std::vector<Vec3> obj;
    std::vector<Vec2> img;
    while (obj.size() < 20) {
        const Vec3 pc(arsafe::uniform(rng, -0.05, 0.05), arsafe::uniform(rng, -0.03, 0.03), arsafe::uniform(rng, 0.2, 0.35));
        obj.push_back(invert(shifted).apply(pc));
        img.push_back(*project_point(k, pc));
    }
    const auto est = solve_pnp(obj, img, k, FrameId::ECM, FrameId::L_CAM);
    EXPECT_LT(rotation_error(est.rotation(), shifted.rotation()), 1e-6);
    EXPECT_LT((est.translation() - shifted.translation()).norm(), 1e-6);
}

TEST(Pnp, PlanarTargetAheadHasPositiveDepth) {
    const auto k = demo_k();
    const auto model = chessboard_model({});
    const RigidTransform pose(geom::Mat3::Identity(), Vec3(-0.025, -0.04, 0.25), FrameId::Board, FrameId::L_CAM);
    std::vector<Vec2> img;
    for (const auto& p : model) img.push_back(*project_point(k, pose.apply(p)));
    EXPECT_GT(solve_pnp(model, img, k).translation().z(), 0.0);
}

TEST(Pnp, RejectsThreePoints) {
    const std::vector<Vec3> obj{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const std::vector<Vec2> img{{0, 0}, {1, 0}, {0, 1}};
    EXPECT_THROW(solve_pnp(obj, img, demo_k()), InvalidArgument);
}

TEST(PnpRansac, NoOutliersMatchesPlainSolve) {
    const auto k = demo_k();
    const auto model = chessboard_model({});
    const auto pose = five_poses()[2];
    Rng rng = make_rng(41);
    std::vector<Vec2> img;
    for (const auto& p : model) img.push_back(*project_point(k, pose.apply(p)) + Vec2(gaussian(rng), gaussian(rng)) * 0.3);
    const auto plain = solve_pnp(model, img, k);
    const auto rs = pnp_ransac(model, img, k, {.iterations = 200, .inlier_px = 5.0});
    EXPECT_EQ(rs.inliers.size(), model.size());
    EXPECT_LT((rs.pose.rotation() - plain.rotation()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((rs.pose.translation() - plain.translation()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(PnpRansac, ExcludesPlantedOutliers) {
    const auto k = demo_k();
    const auto model = chessboard_model({});
    const auto pose = five_poses()[0];
    Rng rng = make_rng(42);
    std::vector<Vec2> img;
    std::vector<bool> outlier(model.size(), false);
    for (std::size_t i = 0; i < model.size(); ++i) {
        img.push_back(*project_point(k, pose.apply(model[i])));
        if (i % 10 < 3) {
            outlier[i] = true;
            img.back() = Vec2(arsafe::uniform(rng, 0, 640), arsafe::uniform(rng, 0, 360));
        }
    }
    const auto rs = pnp_ransac(model, img, k, {.seed = 7});
    for (std::size_t i : rs.inliers) EXPECT_FALSE(outlier[i]) << i;
    EXPECT_LT(rotation_error(rs.pose.rotation(), pose.rotation()), 1e-4);
}

TEST(PnpRansac, ZeroThresholdHasNoConsensus) {
    const auto k = demo_k();
    const auto model = chessboard_model({});
    Rng rng = make_rng(43);
    std::vector<Vec2> img;
    for (const auto& p : model) img.push_back(*project_point(k, five_poses()[0].apply(p)) + Vec2(gaussian(rng), gaussian(rng)));
    EXPECT_THROW(pnp_ransac(model, img, k, {.iterations = 50, .inlier_px = 0.0}), NoConsensus);
}

TEST(PnpRansac, DeterministicForSeed) {
    const auto k = demo_k();
    const auto model = chessboard_model({});
    Rng rng = make_rng(44);
    std::vector<Vec2> img;
    for (const auto& p : model) img.push_back(*project_point(k, five_poses()[3].apply(p)) + Vec2(gaussian(rng), gaussian(rng)) * 0.5);
    const auto a = pnp_ransac(model, img, k, {.seed = 3});
    const auto b = pnp_ransac(model, img, k, {.seed = 3});
    EXPECT_EQ(a.pose, b.pose);
    EXPECT_EQ(a.inliers, b.inliers);
}

TEST(HandEye, PerfectGeometryIsZeroAndOffsetCounts) {
    const auto k = demo_k();
    const RigidTransform t(geom::Mat3::Identity(), Vec3(0, 0, 0.2), FrameId::ECM, FrameId::L_CAM);
    HandEyeSet set;
    set.ee_points = {Vec3(0.01, 0.02, 0.0)};
    set.image_points = {*project_point(k, t.apply(set.ee_points[0]))};
    EXPECT_LT(hand_eye_error(set, t, k), 1e-12);
    set.image_points[0].y() += 2.0;
    EXPECT_NEAR(hand_eye_error(set, t, k), 2.0, 1e-12);
}
