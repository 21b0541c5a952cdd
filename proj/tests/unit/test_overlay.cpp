#include "arsafe/overlay/overlay.hpp"
#include "arsafe/sim/vessel.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace arsafe;
using namespace arsafe::overlay;
using arsafe::testing::random_transform;
using geom::PointCloud;
using geom::RigidTransform;
using geom::TriangleMesh;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

namespace {

CameraIntrinsics cam(int w = 640, int h = 360) { return geom::make_intrinsics(700, 700, 319.5, 179.5, w, h); }

FrameGraph identity_graph() {
    FrameGraph g;
    g.set(RigidTransform(FrameId::BL, FrameId::ECM));
    g.set(RigidTransform(FrameId::ECM, FrameId::L_CAM));
    g.set(RigidTransform(Mat3::Identity(), Vec3(-0.004, 0, 0), FrameId::L_CAM, FrameId::R_CAM));
    return g;
}

// Pinhole with distortion written out from the intrinsics.
Vec2 pinhole(const CameraIntrinsics& k, const Vec3& p) {
    const double x = p.x() / p.z(), y = p.y() / p.z();
    const double r2 = x * x + y * y;
    const double radial = 1 + k.k1() * r2 + k.k2() * r2 * r2 + k.k3() * r2 * r2 * r2;
    const double xd = x * radial + 2 * k.p1() * x * y + k.p2() * (r2 + 2 * x * x);
    const double yd = y * radial + k.p1() * (r2 + 2 * y * y) + 2 * k.p2() * x * y;
    return {k.fx * xd + k.cx, k.fy * yd + k.cy};
}

Mat4 homogeneous(const RigidTransform& t) { return t.matrix(); }

TriangleMesh quad(double z, double half, FrameId frame = FrameId::BL) {
    TriangleMesh m(frame);
    m.vertices = {{-half, -half, z}, {half, -half, z}, {half, half, z}, {-half, half, z}};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    return m;
}

RgbImage gray_frame(int w = 640, int h = 360) { return RgbImage(w, h, Rgb8{30, 30, 30}); }

}  // namespace

TEST(Project, IdentityMapsOpticalAxisToPrincipalPoint) {
    PointCloud c(FrameId::BL);
    c.points = {{0, 0, 0.1}};
    const auto p = project_model_left(c, identity_graph(), cam());
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p.visible[0], 1);
    EXPECT_DOUBLE_EQ(p.pixels[0].x(), 319.5);
    EXPECT_DOUBLE_EQ(p.pixels[0].y(), 179.5);
    EXPECT_DOUBLE_EQ(p.depth[0], 0.1);
}

TEST(Project, MatchesMatrixChainOracle) {
    auto rng = make_rng(11);
    auto k = cam();
    k.distortion = {-0.1, 0.02, 0.001, -0.0005, 0.0};
    for (int trial = 0; trial < 20; ++trial) {
        FrameGraph g;
        const auto bl_ecm = random_transform(rng, FrameId::BL, FrameId::ECM, 0.3, 0.02);
        const auto ecm_l = random_transform(rng, FrameId::ECM, FrameId::L_CAM, 0.3, 0.02);
        const auto l_r = random_transform(rng, FrameId::L_CAM, FrameId::R_CAM, 0.05, 0.005);
        g.set(bl_ecm);
        g.set(ecm_l);
        g.set(l_r);
        PointCloud c(FrameId::BL);
        for (int i = 0; i < 50; ++i) c.points.push_back(arsafe::testing::random_vec(rng, -0.02, 0.02) + Vec3(0, 0, 0.1));
        const auto left = project_model_left(c, g, k);
        const auto right = project_model_right(c, g, k);
        const Mat4 ml = homogeneous(ecm_l) * homogeneous(bl_ecm);
        const Mat4 mr = homogeneous(l_r) * ml;
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            const Vec4 h(c.points[i].x(), c.points[i].y(), c.points[i].z(), 1.0);
            const Vec3 pl = (ml * h).head<3>(), pr = (mr * h).head<3>();
            ASSERT_GT(pl.z(), 0);
            ASSERT_GT(pr.z(), 0);
            EXPECT_LT((left.pixels[i] - pinhole(k, pl)).norm(), 1e-9);
            EXPECT_LT((right.pixels[i] - pinhole(k, pr)).norm(), 1e-9);
        }
    }
}

TEST(Project, CullsBehindCamera) {
    PointCloud c(FrameId::BL);
    c.points = {{0, 0, -0.1}, {0, 0, 0}, {0, 0, 0.05}};
    const auto p = project_model_left(c, identity_graph(), cam());
    EXPECT_EQ(p.visible[0], 0);
    EXPECT_EQ(p.visible[1], 0);
    EXPECT_EQ(p.visible[2], 1);
}

TEST(Project, MissingTransformAndWrongFrameThrow) {
    FrameGraph g;
    g.set(RigidTransform(FrameId::BL, FrameId::ECM));
    PointCloud c(FrameId::BL);
    c.points = {{0, 0, 0.1}};
    EXPECT_THROW(project_model_left(c, g, cam()), MissingTransform);
    PointCloud e(FrameId::ECM);
    e.points = c.points;
    EXPECT_THROW(project_model_left(e, identity_graph(), cam()), FrameMismatch);
}

TEST(Project, MeshKeepsTriangles) {
    const auto m = quad(0.1, 0.01);
    const auto p = project_model_left(m, identity_graph(), cam());
    EXPECT_EQ(p.triangles, m.triangles);
    EXPECT_EQ(p.size(), 4u);
}

TEST(Project, RectifiedDisparityMatchesDepth) {
    const double b = 0.004;
    const auto rig = geom::make_rectified_rig(cam(), b);
    FrameGraph g = identity_graph();
    g.set(rig.left_to_right);
    auto rng = make_rng(5);
    PointCloud c(FrameId::BL);
    for (int i = 0; i < 100; ++i) {
        c.points.push_back(Vec3(uniform(rng, -0.02, 0.02), uniform(rng, -0.01, 0.01), uniform(rng, 0.08, 0.12)));
    }
    const auto l = project_model_rectified(c, g, rig, geom::StereoSide::Left);
    const auto r = project_model_rectified(c, g, rig, geom::StereoSide::Right);
    const double f = rig.rect().focal;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        EXPECT_NEAR(l.pixels[i].x() - r.pixels[i].x(), f * b / l.depth[i], 1e-6);
        EXPECT_NEAR(l.pixels[i].y(), r.pixels[i].y(), 1e-9);
    }
}

TEST(Render, NoPrimitivesLeavesFrameUnchanged) {
    auto rng = make_rng(2);
    RgbImage f(64, 48);
    for (auto& px : f.values()) {
        px = {static_cast<std::uint8_t>(uniform_index(rng, 256)), static_cast<std::uint8_t>(uniform_index(rng, 256)),
              static_cast<std::uint8_t>(uniform_index(rng, 256))};
    }
    const auto out = render_overlay(f, Primitives{}, Rgb8{255, 0, 0}, OverlayStyle{});
    EXPECT_TRUE(geom::bitwise_equal(out, f));
}

TEST(Render, OpaqueFillHasExactColourAndUncoveredPixelsKeepBytes) {
    const auto k = cam();
    const auto p = project_model_left(quad(0.1, 0.01), identity_graph(), k);
    OverlayStyle s;
    s.opacity = 1.0;
    const auto f = gray_frame();
    const auto out = render_overlay(f, p, Rgb8{200, 10, 40}, s);
    const auto cov = overlay_coverage(f.width(), f.height(), p, s);
    // 0.02 m at 0.1 m with f = 700 spans 140 px; pixel centres strictly inside the square.
    EXPECT_NEAR(static_cast<double>(geom::count_on(cov)), 140.0 * 140.0, 2 * 141.0 + 1);
    for (int v = 0; v < f.height(); ++v) {
        for (int u = 0; u < f.width(); ++u) {
            if (cov(u, v)) {
                EXPECT_EQ(out(u, v), (Rgb8{200, 10, 40}));
            } else {
                EXPECT_EQ(out(u, v), f(u, v));
            }
        }
    }
}

TEST(Render, BlendRule) {
    const auto p = project_model_left(quad(0.1, 0.01), identity_graph(), cam());
    OverlayStyle s;
    s.opacity = 0.6;
    const auto out = render_overlay(gray_frame(), p, Rgb8{200, 10, 40}, s);
    // round(0.4*30 + 0.6*c)
    EXPECT_EQ(out(320, 180), (Rgb8{132, 18, 36}));
}

TEST(Render, NearerPrimitiveWins) {
    TriangleMesh m(FrameId::BL);
    const auto far = quad(0.2, 0.02);
    const auto near = quad(0.1, 0.005);
    m.vertices = far.vertices;
    m.triangles = far.triangles;
    // Far drawn after near to exercise the depth test.
    for (const auto& v : near.vertices) m.vertices.push_back(v);
    m.triangles.insert(m.triangles.begin(), {{4, 5, 6}, {4, 6, 7}});
    auto p = project_model_left(m, identity_graph(), cam());
    p.colors = {{255, 0, 0}, {255, 0, 0}, {0, 0, 255}, {0, 0, 255}};
    OverlayStyle s;
    s.opacity = 1.0;
    const auto out = render_overlay(gray_frame(), p, Rgb8{}, s);
    // Depth oracle: near square covers |x| < 0.005*700/0.1 = 35 px around the centre.
    for (int v = 100; v < 260; ++v) {
        for (int u = 240; u < 400; ++u) {
            const double du = std::abs(u - 319.5), dv = std::abs(v - 179.5);
            if (du < 34 && dv < 34) EXPECT_EQ(out(u, v), (Rgb8{255, 0, 0}));
            else if (du > 36 || dv > 36) {
                if (du < 69 && dv < 69) EXPECT_EQ(out(u, v), (Rgb8{0, 0, 255}));
            }
        }
    }
}

TEST(Render, CulledTriangleSkipped) {
    TriangleMesh m(FrameId::BL);
    m.vertices = {{-0.01, -0.01, 0.1}, {0.01, -0.01, 0.1}, {0, 0.01, -0.1}};
    m.triangles = {{0, 1, 2}};
    const auto p = project_model_left(m, identity_graph(), cam());
    EXPECT_EQ(geom::count_on(overlay_coverage(640, 360, p, OverlayStyle{})), 0u);
}

TEST(Render, SplatCoversDisc) {
    PointCloud c(FrameId::BL);
    c.points = {{0, 0, 0.1}};
    Primitives p = project_model_left(c, identity_graph(), geom::make_intrinsics(700, 700, 10, 10, 21, 21));
    OverlayStyle s;
    s.mode = OverlayMode::Splat;
    s.splat_radius = 2;
    // Integer-centred disc of radius 2: 13 pixels.
    EXPECT_EQ(geom::count_on(overlay_coverage(21, 21, p, s)), 13u);
}

TEST(Render, InvalidStyleThrows) {
    OverlayStyle s;
    s.opacity = 1.5;
    EXPECT_THROW(render_overlay(gray_frame(), Primitives{}, Rgb8{}, s), InvalidArgument);
}

TEST(Render, VesselOverlayDeterministic) {
    sim::VesselSpec spec;
    spec.control_points = {{-0.02, 0, 0.1}, {0, 0.005, 0.1}, {0.02, 0, 0.1}};
    const auto mesh = sim::build_vessel_mesh(spec, FrameId::BL);
    const auto p = project_model_left(mesh, identity_graph(), cam());
    const auto a = render_overlay(gray_frame(), p, Rgb8{255, 0, 0}, OverlayStyle{});
    const auto b = render_overlay(gray_frame(), p, Rgb8{255, 0, 0}, OverlayStyle{});
    EXPECT_TRUE(geom::bitwise_equal(a, b));
    EXPECT_GT(geom::count_on(overlay_coverage(640, 360, p, OverlayStyle{})), 1000u);
}

namespace {

std::size_t count_colour(const RgbImage& img, const Box& box, Rgb8 c) {
    std::size_t n = 0;
    for (int v = box.v0; v <= box.v1; ++v)
        for (int u = box.u0; u <= box.u1; ++u)
            if (img.contains(u, v) && img(u, v) == c) ++n;
    return n;
}

}  // namespace

TEST(Gauges, FullNeutralAtSafeRange) {
    const OverlayStyle s;
    const auto out = render_gauges(gray_frame(), proximity::gauge_state(0.06, 0.2), s);
    for (bool left : {true, false}) {
        const auto box = gauge_box(640, s.gauge, left);
        EXPECT_GT(count_colour(out, box, proximity::band_color(0.06)), 500u);
        EXPECT_EQ(count_colour(out, box, s.gauge.track), 0u);
    }
}

TEST(Gauges, LeftRedAtFourMillimetres) {
    const OverlayStyle s;
    const auto out = render_gauges(gray_frame(), proximity::gauge_state(0.004, 0.06), s);
    const auto lbox = gauge_box(640, s.gauge, true);
    const auto rbox = gauge_box(640, s.gauge, false);
    const Rgb8 red{220, 20, 20};
    EXPECT_EQ(proximity::band_color(0.004), red);
    const auto red_px = count_colour(out, lbox, red);
    const auto track_px = count_colour(out, lbox, s.gauge.track);
    EXPECT_GT(red_px, 0u);
    // About 1/15 of the ring is filled.
    EXPECT_NEAR(static_cast<double>(red_px) / (red_px + track_px), 0.004 / 0.06, 0.02);
    EXPECT_EQ(count_colour(out, rbox, red), 0u);
}

TEST(Gauges, FillFractionMonotone) {
    const OverlayStyle s;
    const auto box = gauge_box(640, s.gauge, true);
    std::size_t prev_track = std::numeric_limits<std::size_t>::max();
    for (double d : {0.0, 0.01, 0.02, 0.03, 0.045, 0.06}) {
        const auto out = render_gauges(gray_frame(), proximity::gauge_state(d, 0.06), s);
        const auto track = count_colour(out, box, s.gauge.track);
        EXPECT_LE(track, prev_track);
        prev_track = track;
    }
    EXPECT_EQ(prev_track, 0u);
}

TEST(Gauges, OnlyTouchGaugeBoxesAndDeterministic) {
    const OverlayStyle s;
    const auto f = gray_frame();
    const auto a = render_gauges(f, proximity::gauge_state(0.012, 0.027), s);
    const auto b = render_gauges(f, proximity::gauge_state(0.012, 0.027), s);
    EXPECT_TRUE(geom::bitwise_equal(a, b));
    const auto lb = gauge_box(640, s.gauge, true), rb = gauge_box(640, s.gauge, false);
    for (int v = 0; v < f.height(); ++v)
        for (int u = 0; u < f.width(); ++u)
            if (!lb.contains(u, v) && !rb.contains(u, v)) ASSERT_EQ(a(u, v), f(u, v)) << u << "," << v;
    EXPECT_FALSE(geom::bitwise_equal(a, f));
}
