#include "arsafe/geom/camera.hpp"
#include "arsafe/geom/cloud.hpp"
#include "arsafe/geom/io.hpp"
#include "arsafe/geom/json.hpp"
#include "arsafe/geom/resample.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>

using namespace arsafe;
using namespace arsafe::geom;
using arsafe::testing::random_transform;
using arsafe::testing::random_vec;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("arsafe_geom_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

double max_dev(const RigidTransform& a, const RigidTransform& b) {
    return std::max((a.rotation() - b.rotation()).cwiseAbs().maxCoeff(),
                    (a.translation() - b.translation()).cwiseAbs().maxCoeff());
}

CameraIntrinsics demo_k() { return make_intrinsics(800, 800, 320, 180, 640, 360); }

}  // namespace

TEST(Compose, IdentityWithIdentity) {
    const auto i = RigidTransform::identity(FrameId::ECM);
    EXPECT_EQ(compose(i, i), i);
}

TEST(Compose, InverseCancels) {
    Rng rng = make_rng(1);
    const auto t = random_transform(rng, FrameId::ECM, FrameId::L_CAM);
    const auto c = compose(t, invert(t));
    EXPECT_EQ(c.from(), FrameId::ECM);
    EXPECT_EQ(c.to(), FrameId::ECM);
    EXPECT_LT(max_dev(c, RigidTransform::identity(FrameId::ECM)), 1e-12);
}

TEST(Compose, MatchesSequentialApplication) {
    Rng rng = make_rng(2);
    const auto t1 = random_transform(rng, FrameId::BL, FrameId::ECM);
    const auto t2 = random_transform(rng, FrameId::ECM, FrameId::L_CAM);
    const auto c = compose(t1, t2);
    double dev = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Vec3 p = random_vec(rng, -0.5, 0.5);
        dev = std::max(dev, (c.apply(p) - t2.apply(t1.apply(p))).norm());
    }
    EXPECT_LT(dev, 1e-12);
}

TEST(Compose, RejectsMismatchedLabels) {
    const RigidTransform a(FrameId::BL, FrameId::ECM);
    const RigidTransform b(FrameId::L_CAM, FrameId::R_CAM);
    EXPECT_THROW(compose(a, b), FrameMismatch);
}

TEST(Compose, AssociativeOnRandomChains) {
    Rng rng = make_rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_transform(rng, FrameId::BL, FrameId::ECM);
        const auto b = random_transform(rng, FrameId::ECM, FrameId::L_CAM);
        const auto c = random_transform(rng, FrameId::L_CAM, FrameId::Rec_L_CAM);
        EXPECT_LT(max_dev(compose(compose(a, b), c), compose(a, compose(b, c))), 1e-12);
    }
}

TEST(Invert, IdentityIsSelfInverse) {
    const auto i = RigidTransform::identity(FrameId::BL);
    EXPECT_EQ(invert(i), i);
}

TEST(Invert, PureTranslationFlipsSign) {
    const RigidTransform t(Mat3::Identity(), Vec3(0, 0, 0.1), FrameId::ECM, FrameId::L_CAM);
    const auto inv = invert(t);
    EXPECT_EQ(inv.translation(), Vec3(0, 0, -0.1));
    EXPECT_EQ(inv.from(), FrameId::L_CAM);
    EXPECT_EQ(inv.to(), FrameId::ECM);
}

TEST(Invert, DoubleInverseIsOriginal) {
    Rng rng = make_rng(4);
    for (int i = 0; i < 100; ++i) {
        const auto t = random_transform(rng, FrameId::EE1, FrameId::EE2);
        EXPECT_LT(max_dev(invert(invert(t)), t), 1e-12);
    }
}

TEST(RigidTransformType, RejectsNonOrthonormalRotation) {
    Mat3 r = Mat3::Identity();
    r(0, 0) = 1.001;
    EXPECT_THROW(RigidTransform(r, Vec3::Zero(), FrameId::BL, FrameId::ECM), InvalidArgument);
    EXPECT_THROW(RigidTransform(-Mat3::Identity(), Vec3::Zero(), FrameId::BL, FrameId::ECM), InvalidArgument);
}

TEST(TransformPoints, IdentityLeavesCloudUnchanged) {
    PointCloud c(FrameId::ECM, {Vec3(1, 2, 3), Vec3(-1, 0, 0.5)});
    const auto out = transform_points(RigidTransform::identity(FrameId::ECM), c);
    EXPECT_EQ(out.points, c.points);
}

TEST(TransformPoints, QuarterTurnAboutZ) {
    const Mat3 r = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()).toRotationMatrix();
    const RigidTransform t(r, Vec3::Zero(), FrameId::BL, FrameId::ECM);
    const auto out = transform_points(t, PointCloud(FrameId::BL, {Vec3(1, 0, 0)}));
    EXPECT_LT((out.points[0] - Vec3(0, 1, 0)).norm(), 1e-12);
    EXPECT_EQ(out.frame, FrameId::ECM);
}

TEST(TransformPoints, MatchesMatrixOracle) {
    Rng rng = make_rng(5);
    const auto t = random_transform(rng, FrameId::Rec_L_CAM, FrameId::ECM);
    PointCloud c(FrameId::Rec_L_CAM);
    for (int i = 0; i < 500; ++i) c.points.push_back(random_vec(rng, -1, 1));
    const auto out = transform_points(t, c);
    ASSERT_EQ(out.size(), c.size());
    const Mat4 m = t.matrix();
    double dev = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        Eigen::Vector4d h;
        h << c.points[i], 1.0;
        dev = std::max(dev, (out.points[i] - (m * h).head<3>()).norm());
    }
    EXPECT_LT(dev, 1e-12);
}

TEST(TransformPoints, RejectsWrongFrame) {
    const RigidTransform t(FrameId::BL, FrameId::ECM);
    EXPECT_THROW(transform_points(t, PointCloud(FrameId::ECM, {Vec3::Zero()})), FrameMismatch);
}

TEST(ProjectPoint, PrincipalRayHitsPrincipalPoint) {
    const auto px = project_point(demo_k(), Vec3(0, 0, 1));
    ASSERT_TRUE(px);
    EXPECT_EQ(*px, Vec2(320, 180));
}

TEST(ProjectPoint, DirectSubstitution) {
    const auto px = project_point(demo_k(), Vec3(0.1, 0, 1));
    ASSERT_TRUE(px);
    EXPECT_NEAR(px->x(), 400.0, 1e-12);
    EXPECT_NEAR(px->y(), 180.0, 1e-12);
}

TEST(ProjectPoint, RadialDistortionMatchesStepByStep) {
    auto k = demo_k();
    k.distortion[0] = -0.1;
    const auto px = project_point(k, Vec3(0.2, 0.1, 1));
    const double x = 0.2, y = 0.1;
    const double r2 = x * x + y * y;
    const double s = 1.0 + (-0.1) * r2;
    ASSERT_TRUE(px);
    EXPECT_NEAR(px->x(), 800 * x * s + 320, 1e-9);
    EXPECT_NEAR(px->y(), 800 * y * s + 180, 1e-9);
}

TEST(ProjectPoint, CullsPointsBehindCamera) {
    EXPECT_FALSE(project_point(demo_k(), Vec3(0, 0, 0)));
    EXPECT_FALSE(project_point(demo_k(), Vec3(0.1, 0, -1)));
}

TEST(Undistort, PinholeInverseWithoutDistortion) {
    const auto u = undistort_point(demo_k(), Vec2(400, 260));
    EXPECT_TRUE(u.converged);
    EXPECT_NEAR(u.normalized.x(), 0.1, 1e-15);
    EXPECT_NEAR(u.normalized.y(), 0.1, 1e-15);
}

TEST(Undistort, PrincipalPointMapsToOrigin) {
    auto k = demo_k();
    k.distortion = {-0.2, 0.05, 0.001, -0.001, 0.0};
    const auto u = undistort_point(k, Vec2(k.cx, k.cy));
    EXPECT_LT(u.normalized.norm(), 1e-12);
}

TEST(Undistort, RoundTripWithBarrelDistortion) {
    auto k = demo_k();
    k.distortion[0] = -0.2;
    Rng rng = make_rng(6);
    std::vector<Vec2> px;
    for (int i = 0; i < 1000; ++i) {
        const Vec3 p(arsafe::uniform(rng, -0.35, 0.35), arsafe::uniform(rng, -0.2, 0.2), 1.0);
        px.push_back(*project_point(k, p));
    }
    const auto und = undistort_points(k, px);
    double dev = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) {
        EXPECT_TRUE(und[i].converged);
        const auto back = project_point(k, Vec3(und[i].normalized.x(), und[i].normalized.y(), 1.0));
        dev = std::max(dev, (*back - px[i]).norm());
    }
    EXPECT_LT(dev, 1e-6);
}

TEST(Undistort, RoundTripPropertyOverK1Range) {
    Rng rng = make_rng(7);
    for (double k1 : {-0.3, -0.15, 0.1, 0.3}) {
        auto k = demo_k();
        k.distortion[0] = k1;
        for (int i = 0; i < 200; ++i) {
            const Vec3 p(arsafe::uniform(rng, -0.3, 0.3), arsafe::uniform(rng, -0.2, 0.2), 1.0);
            const Vec2 px = *project_point(k, p);
            const auto u = undistort_point(k, px);
            ASSERT_TRUE(u.converged) << "k1=" << k1;
            EXPECT_LT((*project_point(k, Vec3(u.normalized.x(), u.normalized.y(), 1)) - px).norm(), 1e-6);
        }
    }
}

TEST(Undistort, FlagsNonConvergence) {
    auto k = demo_k();
    k.distortion[0] = -5.0;
    const auto u = undistort_point(k, Vec2(640, 360));
    EXPECT_FALSE(u.converged);
}

TEST(Undistort, RejectsNonFiniteCoefficients) {
    auto k = demo_k();
    k.distortion[1] = std::numeric_limits<double>::infinity();
    const std::vector<Vec2> px{Vec2(1, 1)};
    EXPECT_THROW(undistort_points(k, px), InvalidArgument);
}

TEST(StereoRectify, AlreadyRectifiedRigHasIdentityRotations) {
    const auto rig = make_rectified_rig(demo_k(), 0.004);
    EXPECT_LT((rig.rect().left_to_rect.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((rig.rect().right_to_rect.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(rig.rect().left_to_rect.translation(), Vec3::Zero());
}

TEST(StereoRectify, RotatedRigProjectsToEqualRows) {
    Rng rng = make_rng(8);
    StereoRig rig;
    rig.left = make_intrinsics(810, 805, 318, 182, 640, 360);
    rig.right = make_intrinsics(795, 800, 325, 176, 640, 360);
    const Mat3 r = Eigen::AngleAxisd(5.0 * std::numbers::pi / 180.0, Vec3(0.2, 1.0, 0.1).normalized()).toRotationMatrix();
    rig.left_to_right = RigidTransform(r, Vec3(-0.004, 0.0002, 0.0001), FrameId::L_CAM, FrameId::R_CAM);
    const auto rect = stereo_rectify(rig);
    const auto& g = rect.rect();
    double dev = 0.0;
    for (int i = 0; i < 200; ++i) {
        const Vec3 x(arsafe::uniform(rng, -0.03, 0.03), arsafe::uniform(rng, -0.02, 0.02), arsafe::uniform(rng, 0.06, 0.15));
        const Vec3 xl = g.left_to_rect.apply(x);
        const Vec3 xr = g.right_to_rect.apply(rig.left_to_right.apply(x));
        const auto pl = project_point(g.k_rect, xl);
        const auto pr = project_point(g.k_rect, xr);
        ASSERT_TRUE(pl && pr);
        dev = std::max(dev, std::abs(pl->y() - pr->y()));
        // Disparity relation on the rectified pair.
        EXPECT_NEAR(pl->x() - pr->x(), g.focal * rect.baseline() / xl.z(), 1e-6);
    }
    EXPECT_LT(dev, 1e-6);
    EXPECT_EQ(g.left_to_rect.translation(), Vec3::Zero());
    EXPECT_NEAR(rect.baseline(), rig.left_to_right.translation().norm(), 1e-12);
}

TEST(StereoRectify, RejectsZeroBaseline) {
    StereoRig rig;
    rig.left = rig.right = demo_k();
    EXPECT_THROW(stereo_rectify(rig), DegenerateInput);
}

TEST(StereoRectify, DisparityMatchesDepthOnRectifiedRig) {
    const auto rig = make_rectified_rig(make_intrinsics(700, 700, 319.5, 179.5, 640, 360), 0.004);
    Rng rng = make_rng(9);
    for (int i = 0; i < 200; ++i) {
        const Vec3 x(arsafe::uniform(rng, -0.05, 0.05), arsafe::uniform(rng, -0.03, 0.03), arsafe::uniform(rng, 0.05, 0.2));
        const auto pl = project_point(rig.rect().k_rect, x);
        const auto pr = project_point(rig.rect().k_rect, rig.left_to_right.apply(x));
        EXPECT_NEAR(pl->x() - pr->x(), 700.0 * 0.004 / x.z(), 1e-6);
    }
}

TEST(RemapImage, IdentityRectificationLeavesImageUnchanged) {
    const auto rig = make_rectified_rig(make_intrinsics(500, 500, 31.5, 23.5, 64, 48), 0.004);
    Raster<double> img(64, 48);
    Rng rng = make_rng(10);
    for (double& v : img.values()) v = arsafe::uniform(rng, 0, 1);
    const auto out = remap_image(img, rig, StereoSide::Left);
    EXPECT_TRUE(bitwise_equal(out, img));
}

TEST(RemapImage, ConstantImageStaysConstantInside) {
    StereoRig rig;
    rig.left = rig.right = make_intrinsics(500, 500, 32, 24, 64, 48);
    const Mat3 r = Eigen::AngleAxisd(0.03, Vec3::UnitY()).toRotationMatrix();
    rig.left_to_right = RigidTransform(r, Vec3(-0.004, 0, 0), FrameId::L_CAM, FrameId::R_CAM);
    rig = stereo_rectify(rig);
    const Raster<double> img(64, 48, 7.25);
    const auto out = remap_image(img, rig, StereoSide::Right);
    std::size_t valid = 0;
    for (double v : out.values()) {
        if (is_valid(v)) {
            ++valid;
            EXPECT_NEAR(v, 7.25, 1e-12);
        }
    }
    EXPECT_GT(valid, out.size() / 2);
}

TEST(RemapImage, GradientMatchesInverseMapOracle) {
    StereoRig rig;
    rig.left = make_intrinsics(500, 505, 33, 22, 64, 48);
    rig.right = make_intrinsics(498, 500, 30, 25, 64, 48);
    const Mat3 r = Eigen::AngleAxisd(0.05, Vec3(0.3, 1, 0).normalized()).toRotationMatrix();
    rig.left_to_right = RigidTransform(r, Vec3(-0.004, 0.0001, 0), FrameId::L_CAM, FrameId::R_CAM);
    rig.left.distortion[0] = -0.05;
    rig = stereo_rectify(rig);
    Raster<double> img(64, 48);
    for (int v = 0; v < 48; ++v)
        for (int u = 0; u < 64; ++u) img(u, v) = 0.5 * u + 0.25 * v + 3.0;
    const auto out = remap_image(img, rig, StereoSide::Left);
    const auto& g = rig.rect();
    const Mat3 back = g.left_to_rect.rotation().transpose();
    double dev = 0.0;
    for (int v = 0; v < 48; ++v) {
        for (int u = 0; u < 64; ++u) {
            const Vec3 ray((u - g.k_rect.cx) / g.k_rect.fx, (v - g.k_rect.cy) / g.k_rect.fy, 1.0);
            const auto src = project_point(rig.left, back * ray);
            const bool inside = src && src->x() >= 0 && src->y() >= 0 && src->x() <= 63 && src->y() <= 47;
            if (!inside) continue;
            ASSERT_TRUE(is_valid(out(u, v)));
            dev = std::max(dev, std::abs(out(u, v) - (0.5 * src->x() + 0.25 * src->y() + 3.0)));
        }
    }
    EXPECT_LT(dev, 1e-9);
}

TEST(Resize, DisparityScaledByOneThird) {
    const DisparityMap d(1920, 1080, 12.0);
    const auto out = resize_disparity(d, 640, 360);
    EXPECT_EQ(out.width(), 640);
    EXPECT_EQ(out.height(), 360);
    for (double v : out.values()) EXPECT_DOUBLE_EQ(v, 4.0);
}

TEST(Resize, ConstantRasterStaysConstant) {
    const Raster<double> r(90, 60, 3.5);
    for (double v : resize_bilinear(r, 30, 20).values()) EXPECT_EQ(v, 3.5);
    const BinaryMask m(90, 60, kMaskOn);
    EXPECT_EQ(count_on(resize_nearest(m, 30, 20)), 600u);
}

TEST(Resize, UpThenDownRecoversSmoothRamp) {
    Raster<double> r(40, 30);
    for (int v = 0; v < 30; ++v)
        for (int u = 0; u < 40; ++u) r(u, v) = 0.01 * u * u + 0.3 * v;
    const auto back = resize_bilinear(resize_bilinear(r, 120, 90), 40, 30);
    double dev = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) dev = std::max(dev, std::abs(back.values()[i] - r.values()[i]));
    EXPECT_LT(dev, 1e-6);
}

TEST(Resize, InvalidCellsPropagate) {
    Raster<double> r(6, 6, 1.0);
    r(2, 2) = kInvalid;
    const auto out = resize_bilinear(r, 3, 3);
    EXPECT_FALSE(is_valid(out(1, 1)));
}

TEST(ScaleIntrinsics, PixelCenterAligned) {
    const auto k = scale_intrinsics(make_intrinsics(2100, 2100, 959.5, 539.5, 1920, 1080), 640, 360);
    EXPECT_DOUBLE_EQ(k.fx, 700.0);
    EXPECT_DOUBLE_EQ(k.cx, 319.5);
    EXPECT_DOUBLE_EQ(k.cy, 179.5);
}

TEST(FrameGraphTest, ResolvesChainsInBothDirections) {
    Rng rng = make_rng(11);
    FrameGraph g;
    const auto a = random_transform(rng, FrameId::BL, FrameId::ECM);
    const auto b = random_transform(rng, FrameId::ECM, FrameId::L_CAM);
    g.set(a);
    g.set(b);
    EXPECT_LT(max_dev(g.resolve(FrameId::BL, FrameId::L_CAM), compose(a, b)), 1e-12);
    EXPECT_LT(max_dev(g.resolve(FrameId::L_CAM, FrameId::BL), invert(compose(a, b))), 1e-12);
    EXPECT_THROW(g.get(FrameId::BL, FrameId::L_CAM), MissingTransform);
    EXPECT_THROW(g.resolve(FrameId::BL, FrameId::R_CAM), MissingTransform);
}

TEST(Io, PfmRoundTripIsFloat32Exact) {
    const auto dir = temp_dir("pfm");
    Raster<double> r(17, 9);
    Rng rng = make_rng(12);
    for (double& v : r.values()) v = arsafe::uniform(rng, 0.05, 0.2);
    r(3, 4) = kInvalid;
    write_pfm(dir / "a.pfm", r);
    const auto back = read_pfm(dir / "a.pfm");
    EXPECT_TRUE(bitwise_equal(back, quantize_f32(r)));
    EXPECT_FALSE(is_valid(back(3, 4)));
    // Rows are stored bottom-up: first payload float is the last image row.
    std::ifstream in(dir / "a.pfm", std::ios::binary);
    std::string line;
    for (int i = 0; i < 3; ++i) std::getline(in, line);
    float first = 0.0f;
    in.read(reinterpret_cast<char*>(&first), 4);
    EXPECT_EQ(first, static_cast<float>(r(0, 8)));
}

TEST(Io, TruncatedPfmNamesFileAndOffset) {
    const auto dir = temp_dir("pfm_trunc");
    write_pfm(dir / "t.pfm", Raster<double>(8, 8, 1.0));
    std::filesystem::resize_file(dir / "t.pfm", std::filesystem::file_size(dir / "t.pfm") - 10);
    try {
        read_pfm(dir / "t.pfm");
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("t.pfm"), std::string::npos);
        EXPECT_NE(msg.find("byte offset"), std::string::npos);
    }
}

TEST(Io, PgmAndPpmRoundTrip) {
    const auto dir = temp_dir("pnm");
    GrayImage g(13, 7);
    RgbImage c(13, 7);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.values()[i] = static_cast<std::uint8_t>(i * 7);
        c.values()[i] = {static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(2 * i), 9};
    }
    write_pgm(dir / "g.pgm", g);
    write_ppm(dir / "c.ppm", c);
    EXPECT_EQ(read_pgm(dir / "g.pgm"), g);
    EXPECT_EQ(read_ppm(dir / "c.ppm"), c);
}

TEST(Io, PlyConvertsUnits) {
    const auto dir = temp_dir("ply");
    PointCloud c(FrameId::ECM, {Vec3(0.01, 0.02, 0.1), Vec3(-0.005, 0, 0.08)});
    c.normals = {Vec3::UnitZ(), Vec3::UnitX()};
    write_ply(dir / "c.ply", c, LengthUnit::Millimeter);
    const auto back = read_ply(dir / "c.ply", FrameId::ECM);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_TRUE(back.has_normals());
    EXPECT_LT((back.points[0] - c.points[0]).norm(), 1e-15);
    EXPECT_LT((back.points[1] - c.points[1]).norm(), 1e-15);
}

TEST(Io, ObjFanTriangulatesPolygons) {
    const auto dir = temp_dir("obj");
    {
        std::ofstream out(dir / "q.obj");
        out << "# unit cm\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    }
    const auto mesh = read_obj(dir / "q.obj", FrameId::BL);
    ASSERT_EQ(mesh.triangles.size(), 2u);
    EXPECT_NEAR(mesh.total_area(), 1e-4, 1e-15);
}

TEST(Io, PngAndBase64RoundTrip) {
    RgbImage img(5, 4);
    for (std::size_t i = 0; i < img.size(); ++i) img.values()[i] = {static_cast<std::uint8_t>(i * 11), 3, 250};
    const auto png = encode_png(img);
    EXPECT_EQ(decode_png(base64_decode(base64_encode(png))), img);
    EXPECT_EQ(base64_encode({'M', 'a', 'n'}), "TWFu");
}

TEST(Json, TransformAndRigRoundTrip) {
    Rng rng = make_rng(13);
    const auto t = random_transform(rng, FrameId::ECM, FrameId::L_CAM);
    const nlohmann::json j = t;
    const auto back = transform_from_json(j);
    EXPECT_LT(max_dev(back, t), 1e-15);
    EXPECT_EQ(back.from(), FrameId::ECM);

    const auto rig = make_rectified_rig(make_intrinsics(700, 700, 319.5, 179.5, 640, 360), 0.004);
    const nlohmann::json jr = rig;
    const auto rig2 = rig_from_json(jr);
    EXPECT_EQ(rig2.left, rig.left);
    EXPECT_NEAR(rig2.baseline(), 0.004, 1e-15);
    EXPECT_DOUBLE_EQ(rig2.rect().focal, 700.0);
}

TEST(Json, TranslationUnitsConvertAtBoundary) {
    nlohmann::json j = {{"from", "BL"}, {"to", "ECM"}, {"rotation", {1, 0, 0, 0, 1, 0, 0, 0, 1}},
                        {"translation", {10, 0, 0}}, {"unit", "mm"}};
    EXPECT_NEAR(transform_from_json(j).translation().x(), 0.01, 1e-15);
}
