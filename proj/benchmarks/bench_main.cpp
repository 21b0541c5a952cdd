#include "arsafe/overlay/overlay.hpp"
#include "arsafe/pipeline/session.hpp"
#include "arsafe/proximity/proximity.hpp"
#include "arsafe/registration/align.hpp"
#include "arsafe/registration/features.hpp"
#include "oracles.hpp"

#include <benchmark/benchmark.h>

using namespace arsafe;
using geom::FrameId;
using geom::PointCloud;
using geom::Vec3;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    PointCloud c;
    c.frame = FrameId::ECM;
    for (std::size_t i = 0; i < n; ++i) c.points.push_back(testing::random_vec(rng, -0.05, 0.05));
    return c;
}

proximity::InstrumentModel instrument() {
    proximity::InstrumentModel m;
    m.rcm = Vec3(0.0, 0.0, -0.15);
    m.ee = Vec3(0.01, 0.0, 0.06);
    return m;
}

void BM_KdMinDistance(benchmark::State& state) {
    const auto vessel = random_cloud(static_cast<std::size_t>(state.range(0)), 1);
    const auto index = proximity::build_index(vessel);
    const auto tool = proximity::sample_instrument_cloud(instrument());
    for (auto _ : state) benchmark::DoNotOptimize(proximity::min_distance(index, tool));
}
BENCHMARK(BM_KdMinDistance)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_BruteMinDistance(benchmark::State& state) {
    const auto vessel = random_cloud(static_cast<std::size_t>(state.range(0)), 1);
    const auto tool = proximity::sample_instrument_cloud(instrument());
    for (auto _ : state) benchmark::DoNotOptimize(proximity::min_distance_brute_force(vessel, tool));
}
BENCHMARK(BM_BruteMinDistance)->Arg(1000)->Arg(10000);

void BM_Icp(benchmark::State& state) {
    pipeline::SessionEngine engine(pipeline::default_setup());
    const auto& dst = engine.pipeline().preop_cloud();
    const geom::KdTree tree(dst.points);
    Rng rng(3);
    PointCloud src;
    src.frame = FrameId::ECM;
    for (std::size_t i = 0; i < dst.size(); i += 100) src.points.push_back(dst.points[i]);
    const geom::RigidTransform init(testing::random_rotation(rng, 0.03), testing::random_vec(rng, -0.002, 0.002),
                                    FrameId::ECM, dst.frame);
    const registration::IcpParams params;
    for (auto _ : state) benchmark::DoNotOptimize(registration::icp_register(src, dst, tree, init, params));
}
BENCHMARK(BM_Icp)->Unit(benchmark::kMillisecond);

void BM_RenderOverlay(benchmark::State& state) {
    const auto setup = pipeline::default_setup();
    pipeline::SessionEngine engine(setup);
    const auto& p = engine.pipeline();
    auto graph = p.graph();
    graph.set(setup.bl_to_ecm);
    const geom::RgbImage frame(p.rig().left.width, p.rig().left.height, geom::Rgb8{40, 20, 20});
    const overlay::OverlayStyle style;
    for (auto _ : state) {
        const auto prims = overlay::project_model_rectified(p.preop(), graph, p.rig(), geom::StereoSide::Left);
        benchmark::DoNotOptimize(overlay::render_overlay(frame, prims, geom::Rgb8{0, 200, 255}, style));
    }
}
BENCHMARK(BM_RenderOverlay)->Unit(benchmark::kMillisecond);

void BM_ProcessFrame(benchmark::State& state) {
    pipeline::SessionEngine engine(pipeline::default_setup());
    engine.tick();
    for (auto _ : state) benchmark::DoNotOptimize(engine.tick());
}
BENCHMARK(BM_ProcessFrame)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
