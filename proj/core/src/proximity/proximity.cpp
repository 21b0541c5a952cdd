#include "arsafe/proximity/proximity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace arsafe::proximity {

namespace {

struct Axis {
    Vec3 dir, e1, e2;
    double length;
};

Axis axis_of(const InstrumentModel& inst) {
    Axis a;
    a.length = inst.length();
    a.dir = (inst.ee - inst.rcm) / a.length;
    const Vec3 helper = std::abs(a.dir.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    a.e1 = a.dir.cross(helper).normalized();
    a.e2 = a.dir.cross(a.e1);
    return a;
}

int side_ring_count(double length, double step) {
    // Rings at k*step strictly below the length, plus one at the end effector.
    const auto below = static_cast<int>(std::ceil(length / step));
    return below + 1;
}

int cap_divisions(double radius, double step) { return std::max(1, static_cast<int>(std::ceil(radius / step))); }

void check_sampling(const SamplingParams& p) {
    if (!(p.axial_step > 0.0)) throw InvalidArgument("axial step must be positive");
    if (p.ring_count < 3) throw InvalidArgument("ring count must be at least 3");
}

DistanceResult make_result(const PointCloud& instrument, const std::vector<Vec3>& vessel, std::uint32_t vi,
                           std::uint32_t ii, double d2) {
    return {std::sqrt(d2), vessel[vi], instrument.points[ii], vi, ii};
}

}  // namespace

void InstrumentModel::validate() const {
    if (!(radius > 0.0)) throw InvalidArgument("instrument radius must be positive");
    if (!ee.allFinite() || !rcm.allFinite()) throw InvalidArgument("instrument positions must be finite");
    if (!(length() > 0.0)) throw DegenerateInput("instrument axis has zero length (ee == rcm)");
}

std::size_t instrument_sample_count(const InstrumentModel& inst, const SamplingParams& params) {
    inst.validate();
    check_sampling(params);
    const auto rings = static_cast<std::size_t>(side_ring_count(inst.length(), params.axial_step));
    const auto inner = static_cast<std::size_t>(cap_divisions(inst.radius, params.axial_step) - 1);
    return (rings + inner) * static_cast<std::size_t>(params.ring_count) + 1;
}

PointCloud sample_instrument_cloud(const InstrumentModel& inst, const SamplingParams& params) {
    inst.validate();
    check_sampling(params);
    const Axis ax = axis_of(inst);
    const int n = params.ring_count;
    const int rings = side_ring_count(ax.length, params.axial_step);
    PointCloud cloud(inst.frame);
    cloud.points.reserve(instrument_sample_count(inst, params));
    auto ring = [&](const Vec3& centre, double r) {
        for (int k = 0; k < n; ++k) {
            const double a = 2.0 * std::numbers::pi * k / n;
            cloud.points.push_back(centre + r * (std::cos(a) * ax.e1 + std::sin(a) * ax.e2));
        }
    };
    for (int i = 0; i < rings; ++i) {
        const double s = i + 1 == rings ? ax.length : i * params.axial_step;
        ring(inst.rcm + s * ax.dir, inst.radius);
    }
    const int m = cap_divisions(inst.radius, params.axial_step);
    for (int j = 1; j < m; ++j) ring(inst.ee, inst.radius * j / m);
    cloud.points.push_back(inst.ee);
    return cloud;
}

double sampling_gap(const InstrumentModel& inst, const SamplingParams& params) {
    inst.validate();
    check_sampling(params);
    const double angular = 2.0 * inst.radius * std::sin(0.5 * std::numbers::pi / params.ring_count);
    const double axial_half = 0.5 * std::min(params.axial_step, inst.length());
    const double radial_half = 0.5 * inst.radius / cap_divisions(inst.radius, params.axial_step);
    return std::sqrt(std::max(axial_half, radial_half) * std::max(axial_half, radial_half) + angular * angular);
}

double point_to_instrument_distance(const InstrumentModel& inst, const Vec3& p) {
    inst.validate();
    const Axis ax = axis_of(inst);
    const Vec3 d = p - inst.rcm;
    const double a = d.dot(ax.dir);
    const double rho = (d - a * ax.dir).norm();
    const double r = inst.radius;
    if (a < 0.0) return std::hypot(a, rho - r);  // open end: nearest is the rim
    if (a <= ax.length) {
        const double side = std::abs(rho - r);
        if (rho >= r) return side;
        return std::min(side, ax.length - a);  // inside: side wall or tip disc
    }
    const double beyond = a - ax.length;
    return rho <= r ? beyond : std::hypot(beyond, rho - r);
}

SpatialIndex::SpatialIndex(const PointCloud& cloud) : frame_(cloud.frame), tree_(cloud.points) {
    if (cloud.empty()) throw InvalidArgument("cannot index an empty cloud");
}

SpatialIndex build_index(const PointCloud& cloud) { return SpatialIndex(cloud); }

DistanceResult min_distance(const SpatialIndex& vessel, const PointCloud& instrument) {
    if (instrument.empty()) throw InvalidArgument("instrument cloud is empty");
    if (instrument.frame != vessel.frame()) {
        throw FrameMismatch("instrument cloud is in " + std::string(geom::to_string(instrument.frame)) +
                            " but the vessel index is in " + std::string(geom::to_string(vessel.frame())));
    }
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t bi = 0, bv = 0;
    for (std::uint32_t i = 0; i < instrument.size(); ++i) {
        const auto nn = vessel.tree().nearest(instrument.points[i]);
        if (nn.dist2 < best) {
            best = nn.dist2;
            bi = i;
            bv = nn.index;
        }
    }
    return make_result(instrument, vessel.tree().points(), bv, bi, best);
}

DistanceResult min_distance_brute_force(const PointCloud& vessel, const PointCloud& instrument) {
    if (vessel.empty() || instrument.empty()) throw InvalidArgument("min distance needs two nonempty clouds");
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t bi = 0, bv = 0;
    for (std::uint32_t i = 0; i < instrument.size(); ++i) {
        for (std::uint32_t v = 0; v < vessel.size(); ++v) {
            const double d2 = geom::squared_distance(vessel.points[v], instrument.points[i]);
            if (d2 < best) {
                best = d2;
                bi = i;
                bv = v;
            }
        }
    }
    return make_result(instrument, vessel.points, bv, bi, best);
}

Vec3 align_psm1(const Vec3& ee1_point, const RigidTransform& t) {
    if (t.from() != FrameId::EE1 || t.to() != FrameId::EE2) {
        throw FrameMismatch("PSM1 alignment needs T_EE1^EE2, got " + std::string(geom::to_string(t.from())) + "->" +
                            std::string(geom::to_string(t.to())));
    }
    return t.apply(ee1_point);
}

InstrumentModel align_psm1(const InstrumentModel& inst, const RigidTransform& t) {
    if (inst.frame != FrameId::EE1) throw FrameMismatch("PSM1 instrument must be expressed in EE1");
    InstrumentModel out = inst;
    out.ee = align_psm1(inst.ee, t);
    out.rcm = align_psm1(inst.rcm, t);
    out.frame = FrameId::EE2;
    return out;
}

std::string to_string(Zone z) { return z == Zone::Risk ? "RISK" : "SAFE"; }

std::string to_string(Band b) {
    switch (b) {
        case Band::Red: return "red";
        case Band::Pink: return "pink";
        case Band::Amber: return "amber";
        case Band::Neutral: break;
    }
    return "neutral";
}

Band band_for(double d) {
    if (d < kRedDistance) return Band::Red;
    if (d < kPinkDistance) return Band::Pink;
    if (d < kRiskDistance) return Band::Amber;
    return Band::Neutral;
}

Rgb8 band_color(double d) {
    switch (band_for(d)) {
        case Band::Red: return {220, 20, 20};
        case Band::Pink: return {255, 105, 180};
        case Band::Amber: {
            const double t = (d - kPinkDistance) / (kRiskDistance - kPinkDistance);
            const auto g = static_cast<std::uint8_t>(std::lround(140.0 + t * (210.0 - 140.0)));
            const auto b = static_cast<std::uint8_t>(std::lround(t * 120.0));
            return {255, g, b};
        }
        case Band::Neutral: break;
    }
    return {60, 200, 120};
}

GaugeState gauge_state(double d_left, double d_right) {
    if (!(d_left >= 0.0) || !(d_right >= 0.0)) throw InvalidArgument("distances must be non-negative");
    GaugeState g;
    g.left_gauge = std::clamp(d_left, 0.0, kSafeRange);
    g.right_gauge = std::clamp(d_right, 0.0, kSafeRange);
    g.left_zone = d_left < kRiskDistance ? Zone::Risk : Zone::Safe;
    g.right_zone = d_right < kRiskDistance ? Zone::Risk : Zone::Safe;
    const double closest = std::min(d_left, d_right);
    g.band = band_for(closest);
    g.model_color = band_color(closest);
    return g;
}

nlohmann::json to_json(const GaugeState& g) {
    return {{"left_gauge_m", g.left_gauge},
            {"right_gauge_m", g.right_gauge},
            {"left_zone", to_string(g.left_zone)},
            {"right_zone", to_string(g.right_zone)},
            {"band", to_string(g.band)},
            {"color", {g.model_color.r, g.model_color.g, g.model_color.b}}};
}

}  // namespace arsafe::proximity
