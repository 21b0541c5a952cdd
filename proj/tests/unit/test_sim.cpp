#include "arsafe/geom/io.hpp"
#include "arsafe/recon/reconstruct.hpp"
#include "arsafe/sim/dataset.hpp"
#include "arsafe/sim/noise.hpp"
#include "arsafe/sim/scene.hpp"
#include "arsafe/sim/script.hpp"
#include "arsafe/sim/vessel.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

using namespace arsafe;
using namespace arsafe::sim;
using geom::Mat3;
using geom::Vec2;

namespace {

VesselSpec straight(int radial = 12, int axial = 8) {
    VesselSpec s;
    s.control_points = {{0, 0, 0}, {0.05, 0, 0}};
    s.radius = 0.005;
    s.radial_segments = radial;
    s.axial_segments = axial;
    return s;
}

VesselSpec curved() {
    VesselSpec s;
    s.control_points = {{-0.04, 0, 0.1}, {-0.01, 0.01, 0.1}, {0.015, -0.008, 0.105}, {0.04, 0.004, 0.1}};
    s.radial_segments = 12;
    s.axial_segments = 32;
    return s;
}

// Closest point on triangle abc to p (Voronoi-region walk).
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return a;
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + d1 / (d1 - d3) * ab;
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + d2 / (d2 - d6) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b);
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

double mesh_distance(const TriangleMesh& m, const Vec3& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : m.triangles) {
        best = std::min(best, (p - closest_on_triangle(p, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]])).norm());
    }
    return best;
}

// Scene with only a square backdrop of half-size `half` at depth z in front of an identity camera.
SceneConfig square_scene(double z, double half) {
    SceneConfig s = default_scene();
    s.vessel = straight();
    for (auto& p : s.vessel.control_points) p.z() = -1.0;
    s.vessel.branches.clear();
    s.nodes.centers.clear();
    s.backdrop = {true, z, half, half};
    s.ecm_to_cam = RigidTransform(FrameId::ECM, FrameId::L_CAM);
    return s;
}

SceneState parked() {
    SceneState st;
    proximity::InstrumentModel l, r;
    l.rcm = Vec3(-0.075, 0.02, 0.02);
    l.ee = Vec3(-0.03, 0.0, 0.075);
    r.rcm = Vec3(0.075, 0.02, 0.02);
    r.ee = Vec3(0.03, 0.0, 0.075);
    st.instruments = {l, r};
    return st;
}

}  // namespace

TEST(Vessel, StraightCylinderRadius) {
    const auto spec = straight();
    const auto m = build_vessel_mesh(spec);
    ASSERT_EQ(m.vertices.size(), 9u * 12u + 2u);
    for (std::size_t i = 0; i < 9 * 12; ++i) {
        const Vec3& v = m.vertices[i];
        EXPECT_NEAR(std::hypot(v.y(), v.z()), 0.005, 1e-9);
    }
    EXPECT_NEAR(m.vertices[108].norm(), 0.0, 1e-12);
    EXPECT_NEAR((m.vertices[109] - Vec3(0.05, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(Vessel, TriangleCount) {
    for (int radial : {3, 12, 24}) {
        for (int axial : {1, 5, 64}) {
            const auto m = build_vessel_mesh(straight(radial, axial));
            EXPECT_EQ(m.triangles.size(), static_cast<std::size_t>(2 * radial * axial + 2 * radial));
        }
    }
}

TEST(Vessel, CurvedVerticesOnTube) {
    const auto spec = curved();
    const auto m = build_vessel_mesh(spec);
    std::vector<Vec3> line;
    const int samples = 60000;
    for (int i = 0; i <= samples; ++i) line.push_back(centerline_point(spec.control_points, 3.0 * i / samples));
    const std::size_t side = static_cast<std::size_t>((spec.axial_segments + 1) * spec.radial_segments);
    for (std::size_t i = 0; i < side; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : line) best = std::min(best, (m.vertices[i] - c).squaredNorm());
        const double d = std::sqrt(best);
        EXPECT_GE(d, 0.999 * spec.radius);
        EXPECT_LE(d, 1.001 * spec.radius);
    }
}

TEST(Vessel, WatertightAndOutward) {
    const auto spec = curved();
    const auto m = build_vessel_mesh(spec);
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
    for (const auto& t : m.triangles) {
        for (int e = 0; e < 3; ++e) ++directed[{t[e], t[(e + 1) % 3]}];
    }
    for (const auto& [edge, count] : directed) {
        EXPECT_EQ(count, 1);
        EXPECT_EQ(directed.count({edge.second, edge.first}), 1u);
    }
    // Signed volume of a closed outward mesh is positive and close to the tube volume.
    double vol = 0.0;
    for (const auto& t : m.triangles) {
        vol += m.vertices[t[0]].dot(m.vertices[t[1]].cross(m.vertices[t[2]])) / 6.0;
    }
    double length = 0.0;
    Vec3 prev = centerline_point(spec.control_points, 0.0);
    for (int i = 1; i <= 3000; ++i) {
        const Vec3 c = centerline_point(spec.control_points, 3.0 * i / 3000);
        length += (c - prev).norm();
        prev = c;
    }
    const double polygon_area = 0.5 * spec.radial_segments * spec.radius * spec.radius *
                                std::sin(2.0 * std::numbers::pi / spec.radial_segments);
    EXPECT_NEAR(vol / (polygon_area * length), 1.0, 0.02);
}

TEST(Vessel, TightBendAndInvalidSpec) {
    VesselSpec s;
    s.control_points = {{0, 0, 0}, {0.01, 0, 0}, {0.01, 0.002, 0}, {0, 0.002, 0}};
    s.radius = 0.005;
    s.axial_segments = 30;
    EXPECT_THROW(build_vessel_mesh(s), DegenerateInput);
    VesselSpec one;
    one.control_points = {{0, 0, 0}};
    EXPECT_THROW(build_vessel_mesh(one), InvalidArgument);
    auto neg = straight();
    neg.radius = -1;
    EXPECT_THROW(build_vessel_mesh(neg), InvalidArgument);
}

TEST(Render, EmptySceneAllInvalid) {
    auto s = square_scene(0.1, 0.01);
    s.backdrop.enabled = false;
    const auto v = render_views(s, SceneState{});
    EXPECT_EQ(geom::count_valid(v.depth_gt), 0u);
    EXPECT_EQ(geom::count_valid(v.disp_gt), 0u);
    EXPECT_EQ(geom::count_on(v.mask_gt), 0u);
}

TEST(Render, FlatSquareExactDepth) {
    const auto s = square_scene(0.1, 0.01);
    const auto v = render_views(s, SceneState{});
    const double bf = s.rig.baseline() * s.rig.rect().focal;
    std::size_t covered = 0;
    for (int y = 0; y < 360; ++y) {
        for (int x = 0; x < 640; ++x) {
            const bool inside = std::abs(x - 319.5) < 70.0 && std::abs(y - 179.5) < 70.0;
            if (inside) {
                ++covered;
                ASSERT_EQ(v.depth_gt(x, y), 0.1);
                ASSERT_EQ(v.disp_gt(x, y), bf / 0.1);
            } else {
                ASSERT_FALSE(geom::is_valid(v.depth_gt(x, y))) << x << "," << y;
            }
        }
    }
    EXPECT_EQ(covered, 140u * 140u);
}

TEST(Render, GroundTruthSelfConsistent) {
    const auto s = default_scene();
    const auto v = render_views(s, parked());
    const double bf = s.rig.baseline() * s.rig.rect().focal;
    std::size_t vessel = 0;
    for (std::size_t i = 0; i < v.depth_gt.size(); ++i) {
        const double z = v.depth_gt.values()[i];
        if (geom::is_valid(z)) {
            EXPECT_EQ(v.disp_gt.values()[i], bf / z);
        } else {
            EXPECT_FALSE(geom::is_valid(v.disp_gt.values()[i]));
        }
        const bool is_vessel = v.labels.values()[i] == static_cast<std::uint8_t>(Surface::Vessel);
        EXPECT_EQ(v.mask_gt.values()[i] == geom::kMaskOn, is_vessel);
        vessel += is_vessel;
    }
    EXPECT_GT(vessel, 5000u);
    // The backdrop fills the view.
    EXPECT_EQ(geom::count_valid(v.depth_gt), v.depth_gt.size());
}

TEST(Render, ReprojectedPointsOnSurfaces) {
    const auto s = default_scene();
    const auto st = parked();
    const auto v = render_views(s, st);
    const auto meshes = scene_meshes(s, st);
    const auto cloud = recon::reproject_to_cloud(v.depth_gt, s.rig.rect().k_rect);
    const auto to_ecm = ecm_to_rect_left(s).inverse();
    const double f = s.rig.rect().focal;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < cloud.size(); i += 97) {
        const auto px = cloud.pixels[i];
        const auto kind = static_cast<Surface>(v.labels(px.u, px.v));
        const Vec3 p = to_ecm.apply(cloud.points[i]);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < meshes.meshes.size(); ++m) {
            if (meshes.kinds[m] == kind) best = std::min(best, mesh_distance(meshes.meshes[m], p));
        }
        EXPECT_LE(best, 0.5 * cloud.points[i].z() / f);
        ++checked;
    }
    EXPECT_GT(checked, 2000u);
}

TEST(Render, DeterministicAndInstrumentsOcclude) {
    const auto s = default_scene();
    const auto a = render_views(s, parked());
    const auto b = render_views(s, parked());
    EXPECT_TRUE(geom::bitwise_equal(a.depth_gt, b.depth_gt));
    EXPECT_TRUE(geom::bitwise_equal(a.rgb_l, b.rgb_l));
    EXPECT_TRUE(geom::bitwise_equal(a.rgb_r, b.rgb_r));
    auto st = parked();
    st.instruments[0].ee = Vec3(-0.016, 0.003, 0.085);
    const auto c = render_views(s, st);
    EXPECT_LT(geom::count_on(c.mask_gt), geom::count_on(a.mask_gt));
    std::size_t inst = 0;
    for (auto l : c.labels.values()) inst += l == static_cast<std::uint8_t>(Surface::Instrument);
    EXPECT_GT(inst, 0u);
}

TEST(Render, RemovedNodesDisappear) {
    const auto s = default_scene();
    auto st = parked();
    st.node_present.assign(10, 1);
    auto count_nodes = [](const RenderedViews& v) {
        std::size_t n = 0;
        for (auto l : v.labels.values()) n += l == static_cast<std::uint8_t>(Surface::Node);
        return n;
    };
    const auto all = count_nodes(render_views(s, st));
    st.node_present.assign(10, 0);
    EXPECT_GT(all, 0u);
    EXPECT_EQ(count_nodes(render_views(s, st)), 0u);
    st.node_present.assign(3, 1);
    EXPECT_THROW(render_views(s, st), InvalidArgument);
}

TEST(Render, SceneJsonRoundTrip) {
    const auto s = default_scene();
    const auto back = scene_from_json(nlohmann::json(s));
    EXPECT_EQ(nlohmann::json(back), nlohmann::json(s));
    EXPECT_TRUE(geom::bitwise_equal(render_views(back, parked()).depth_gt, render_views(s, parked()).depth_gt));
}

TEST(Noise, ZeroSpecIsIdentity) {
    const auto v = render_views(default_scene(), parked());
    const auto n = apply_noise(v, NoiseSpec{}, 42);
    EXPECT_TRUE(geom::bitwise_equal(n.disp_gt, v.disp_gt));
    EXPECT_TRUE(geom::bitwise_equal(n.mask_gt, v.mask_gt));
}

TEST(Noise, GaussianMeanUnbiased) {
    DisparityMap d(1000, 1000, 20.0);
    NoiseSpec spec;
    spec.disparity_sigma = 0.5;
    auto rng = make_rng(3);
    const auto n = apply_disparity_noise(d, spec, rng);
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const double e = n.values()[i] - 20.0;
        sum += e;
        sq += e * e;
    }
    const double count = static_cast<double>(n.size());
    EXPECT_LE(std::abs(sum / count), 3.0 * 0.5 / std::sqrt(count));
    EXPECT_NEAR(std::sqrt(sq / count), 0.5, 0.005);
}

TEST(Noise, DropoutBinomial) {
    DisparityMap d(1000, 1000, 20.0);
    NoiseSpec spec;
    spec.dropout = 0.1;
    auto rng = make_rng(4);
    const auto n = apply_disparity_noise(d, spec, rng);
    const double count = static_cast<double>(n.size());
    const double frac = 1.0 - static_cast<double>(geom::count_valid(n)) / count;
    EXPECT_LE(std::abs(frac - 0.1), 3.0 * std::sqrt(0.1 * 0.9 / count));
}

TEST(Noise, QuantizationAndInvalidKept) {
    DisparityMap d(50, 50, 20.3);
    d(3, 3) = geom::kInvalid;
    NoiseSpec spec;
    spec.disparity_sigma = 0.3;
    spec.disparity_step = 0.25;
    auto rng = make_rng(5);
    const auto n = apply_disparity_noise(d, spec, rng);
    EXPECT_FALSE(geom::is_valid(n(3, 3)));
    for (std::size_t i = 0; i < n.size(); ++i) {
        const double x = n.values()[i];
        if (geom::is_valid(x)) EXPECT_EQ(std::fmod(x, 0.25), 0.0);
    }
}

TEST(Noise, MaskJitterStaysNearBoundary) {
    BinaryMask m(100, 80, geom::kMaskOff);
    for (int v = 20; v < 60; ++v)
        for (int u = 30; u < 70; ++u) m(u, v) = geom::kMaskOn;
    NoiseSpec spec;
    spec.mask_jitter = 2;
    auto rng = make_rng(6);
    const auto n = apply_mask_noise(m, spec, rng);
    std::size_t changed = 0;
    for (int v = 0; v < 80; ++v) {
        for (int u = 0; u < 100; ++u) {
            if (n(u, v) == m(u, v)) continue;
            ++changed;
            const int du = std::min(std::abs(u - 30), std::abs(u - 69));
            const int dv = std::min(std::abs(v - 20), std::abs(v - 59));
            EXPECT_TRUE(du <= 2 || dv <= 2);
        }
    }
    EXPECT_GT(changed, 0u);
}

TEST(Noise, BlobsAndDeterminism) {
    BinaryMask m(200, 100, geom::kMaskOff);
    NoiseSpec spec;
    spec.blob_rate = 3.0;
    spec.blob_size = 5;
    auto r1 = make_rng(7), r2 = make_rng(7);
    const auto a = apply_mask_noise(m, spec, r1);
    const auto b = apply_mask_noise(m, spec, r2);
    EXPECT_TRUE(geom::bitwise_equal(a, b));
    EXPECT_GT(geom::count_on(a), 0u);
    EXPECT_LE(geom::count_on(a), 75u);
    NoiseSpec bad;
    bad.dropout = 1.5;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = NoiseSpec{};
    bad.disparity_sigma = -1;
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Noise, ProvidersSeededPerFrame) {
    recon::StereoFrame f;
    f.gt_disparity = DisparityMap(40, 30, 10.0);
    f.gt_mask = BinaryMask(40, 30, geom::kMaskOn);
    NoiseSpec spec;
    spec.disparity_sigma = 1.0;
    spec.blob_rate = 1;
    spec.blob_size = 3;
    NoisyDepthProvider p(spec, 9), q(spec, 9);
    f.index = 4;
    const auto a = p.disparity(f);
    EXPECT_TRUE(geom::bitwise_equal(a, q.disparity(f)));
    f.index = 5;
    EXPECT_FALSE(geom::bitwise_equal(a, p.disparity(f)));
    recon::StereoFrame empty;
    EXPECT_THROW(p.disparity(empty), InvalidArgument);
    NoisyMaskProvider mp(spec, 9);
    EXPECT_THROW(mp.mask(empty), InvalidArgument);
    EXPECT_EQ(noise_from_json(nlohmann::json(spec)).blob_size, 3);
}

namespace {

TrajectoryScript two_key_script() {
    TrajectoryScript s;
    s.left.rcm = Vec3(-0.1, 0, 0);
    s.left.keys = {{0.0, Vec3(0.01, 0.02, 0.1), false}, {2.0, Vec3(0.03, -0.01, 0.09), true}};
    s.right.rcm = Vec3(0.1, 0, 0);
    s.right.keys = {{0.0, Vec3(0.02, 0.0, 0.1), false}, {1.0, Vec3(0.02, 0.01, 0.1), false},
                    {2.0, Vec3(0.0, 0.01, 0.11), false}};
    s.task_end = 2.0;
    return s;
}

}  // namespace

TEST(Script, KeyframesExactAndMidpointMean) {
    const auto s = two_key_script();
    const auto a = evaluate_script(s, 0.0, 0);
    EXPECT_EQ(a.left.model.ee, s.left.keys[0].ee);
    const auto b = evaluate_script(s, 2.0, 0);
    EXPECT_EQ(b.left.model.ee, s.left.keys[1].ee);
    EXPECT_TRUE(b.left.grasp);
    EXPECT_EQ(evaluate_script(s, 1.0, 0).right.model.ee, s.right.keys[1].ee);
    const auto mid = evaluate_script(s, 1.0, 0);
    EXPECT_EQ(mid.left.model.ee, Vec3((s.left.keys[0].ee + s.left.keys[1].ee) / 2.0));
    EXPECT_FALSE(mid.left.grasp);
}

TEST(Script, OutOfRangeAndBadTimes) {
    auto s = two_key_script();
    EXPECT_THROW(evaluate_script(s, -0.1, 0), InvalidArgument);
    EXPECT_THROW(evaluate_script(s, 2.01, 0), InvalidArgument);
    s.left.keys[1].t = 0.0;
    EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(Script, RcmFixed) {
    const auto s = lymphadenectomy_script(default_scene());
    for (double t = s.start(); t <= s.end(); t += 0.37) {
        const auto x = evaluate_script(s, t, 10);
        EXPECT_EQ(x.left.model.rcm, s.left.rcm);
        EXPECT_EQ(x.right.model.rcm, s.right.rcm);
    }
}

TEST(Script, DensePathLengthMatchesPolyline) {
    const auto s = lymphadenectomy_script(default_scene(), {0.004, 1.0, 1.0, 0.002, 3});
    std::vector<double> times;
    for (const ArmScript* a : {&s.left, &s.right})
        for (const auto& k : a->keys) times.push_back(k.t);
    for (double t = s.start(); t < s.end(); t += 0.013) times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    double dense = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const auto a = evaluate_script(s, times[i - 1], 10), b = evaluate_script(s, times[i], 10);
        dense += (b.left.model.ee - a.left.model.ee).norm() + (b.right.model.ee - a.right.model.ee).norm();
    }
    double oracle = 0.0;
    for (const ArmScript* a : {&s.left, &s.right})
        for (std::size_t i = 1; i < a->keys.size(); ++i) oracle += (a->keys[i].ee - a->keys[i - 1].ee).norm();
    EXPECT_NEAR(dense, oracle, 1e-9);
    EXPECT_NEAR(script_path_length(s), oracle, 1e-12);
}

TEST(Script, LymphadenectomyShape) {
    const auto scene = default_scene();
    const auto s = lymphadenectomy_script(scene);
    ASSERT_EQ(s.pickups.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(s.pickups[i].node, i);
        EXPECT_EQ(s.pickups[i].arm, i < 6 ? Arm::Left : Arm::Right);
        EXPECT_EQ(scene.nodes.centers[i].x() < 0.0, i < 6);
    }
    EXPECT_LT(s.task_start, s.pickups.front().t);
    EXPECT_GT(s.task_end, s.pickups.back().t);
    EXPECT_EQ(s.left.keys.front().ee, s.left.keys.back().ee);
    EXPECT_EQ(s.right.keys.front().ee, s.right.keys.back().ee);
    const auto end = evaluate_script(s, s.end(), 10);
    for (auto p : end.node_present) EXPECT_EQ(p, 0);
    const auto start = evaluate_script(s, s.start(), 10);
    for (auto p : start.node_present) EXPECT_EQ(p, 1);
    const auto back = script_from_json(nlohmann::json(s));
    EXPECT_EQ(nlohmann::json(back), nlohmann::json(s));
}

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("arsafe_sim_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "_" +
                std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

SceneConfig small_scene() {
    auto s = default_scene();
    s.rig = geom::scale_rig(s.rig, 160, 90);
    return s;
}

}  // namespace

TEST(Dataset, ExportImportRoundTrip) {
    TempDir tmp;
    const auto scene = small_scene();
    const auto script = lymphadenectomy_script(scene);
    const auto frames = export_dataset(scene, script, 16, tmp.path, 0.5);
    std::size_t dirs = 0;
    for (const auto& e : std::filesystem::directory_iterator(tmp.path)) {
        if (!e.is_directory()) continue;
        ++dirs;
        std::size_t files = 0;
        for (const auto& f : std::filesystem::directory_iterator(e.path())) {
            (void)f;
            ++files;
        }
        EXPECT_EQ(files, 6u);
        for (const char* name : kDatasetFiles) EXPECT_TRUE(std::filesystem::exists(e.path() / name)) << name;
    }
    EXPECT_EQ(dirs, 16u);
    const auto back = import_dataset(tmp.path);
    ASSERT_EQ(back.size(), 16u);
    for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_TRUE(geom::bitwise_equal(back[i].left, frames[i].left));
        EXPECT_TRUE(geom::bitwise_equal(back[i].right, frames[i].right));
        EXPECT_TRUE(geom::bitwise_equal(back[i].disp_gt, frames[i].disp_gt));
        EXPECT_TRUE(geom::bitwise_equal(back[i].depth_gt, frames[i].depth_gt));
        EXPECT_TRUE(geom::bitwise_equal(back[i].mask_gt, frames[i].mask_gt));
        EXPECT_EQ(back[i].t, frames[i].t);
        ASSERT_EQ(back[i].state.instruments.size(), 2u);
        for (std::size_t a = 0; a < 2; ++a) {
            EXPECT_LE((back[i].state.instruments[a].ee - frames[i].state.instruments[a].ee).norm(), 1e-12);
            EXPECT_LE((back[i].state.instruments[a].rcm - frames[i].state.instruments[a].rcm).norm(), 1e-12);
        }
        EXPECT_EQ(back[i].state.node_present, frames[i].state.node_present);
        EXPECT_LE((back[i].ecm_to_cam.matrix() - frames[i].ecm_to_cam.matrix()).norm(), 1e-12);
    }
}

TEST(Dataset, TruncatedPfmNamesFileAndOffset) {
    TempDir tmp;
    const auto scene = small_scene();
    export_dataset(scene, lymphadenectomy_script(scene), 1, tmp.path);
    const auto pfm = tmp.path / "0000" / "disp_gt.pfm";
    const auto size = std::filesystem::file_size(pfm);
    std::filesystem::resize_file(pfm, size - 100);
    try {
        import_dataset(tmp.path);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("disp_gt.pfm"), std::string::npos) << msg;
        EXPECT_NE(msg.find("offset"), std::string::npos) << msg;
    }
}
