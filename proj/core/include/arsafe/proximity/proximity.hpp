#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/cloud.hpp"
#include "arsafe/geom/kdtree.hpp"
#include "arsafe/geom/raster.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace arsafe::proximity {

using geom::FrameId;
using geom::PointCloud;
using geom::RigidTransform;
using geom::Rgb8;
using geom::Vec3;

inline constexpr double kInstrumentRadius = 0.004;  // m
inline constexpr double kSafeRange = 0.06;          // m, gauge full scale
inline constexpr double kRiskDistance = 0.03;       // m
inline constexpr double kPinkDistance = 0.01;       // m
inline constexpr double kRedDistance = 0.005;       // m

/// Shaft of one instrument as a cylinder from the RCM to the end effector.
struct InstrumentModel {
    Vec3 ee = Vec3::Zero();
    Vec3 rcm = Vec3::Zero();
    double radius = kInstrumentRadius;
    FrameId frame = FrameId::ECM;

    void validate() const;
    double length() const { return (ee - rcm).norm(); }
};

struct SamplingParams {
    double axial_step = 0.0015;  // m
    int ring_count = 24;
};

/// Side rings at s = 0, step, 2 step, ... below the shaft length plus one at the end effector;
/// the end-effector disc carries a centre point and m-1 inner rings (m = ceil(radius / step)).
PointCloud sample_instrument_cloud(const InstrumentModel& inst, const SamplingParams& params = {});
std::size_t instrument_sample_count(const InstrumentModel& inst, const SamplingParams& params = {});

/// Upper bound on the distance from any point of the sampled surface to its nearest sample.
double sampling_gap(const InstrumentModel& inst, const SamplingParams& params = {});

/// Exact distance from p to the shaft surface (side plus end-effector disc; the RCM end is open).
double point_to_instrument_distance(const InstrumentModel& inst, const Vec3& p);

/// Exact nearest-neighbour index over one cloud.
class SpatialIndex {
public:
    explicit SpatialIndex(const PointCloud& cloud);
    FrameId frame() const { return frame_; }
    const geom::KdTree& tree() const { return tree_; }
    std::size_t size() const { return tree_.size(); }

private:
    FrameId frame_;
    geom::KdTree tree_;
};

/// Throws InvalidArgument for an empty cloud.
SpatialIndex build_index(const PointCloud& cloud);

struct DistanceResult {
    double distance = 0.0;  // m
    Vec3 vessel_point = Vec3::Zero();
    Vec3 instrument_point = Vec3::Zero();
    std::uint32_t vessel_index = 0;
    std::uint32_t instrument_index = 0;
};

/// Minimum over instrument samples of the nearest vessel distance. Frames must agree.
DistanceResult min_distance(const SpatialIndex& vessel, const PointCloud& instrument);
/// O(N M) reference with the same arithmetic.
DistanceResult min_distance_brute_force(const PointCloud& vessel, const PointCloud& instrument);

/// Maps a PSM1 point (EE1) into EE2 through T_EE1^EE2.
Vec3 align_psm1(const Vec3& ee1_point, const RigidTransform& t_ee1_ee2);
/// Same for a whole instrument model given in EE1; the result is labelled EE2.
InstrumentModel align_psm1(const InstrumentModel& inst, const RigidTransform& t_ee1_ee2);

enum class Zone { Safe, Risk };
enum class Band { Red, Pink, Amber, Neutral };

std::string to_string(Zone z);
std::string to_string(Band b);

Band band_for(double distance);
/// Red, pink, an amber ramp (deep at 1 cm, pale at 3 cm) and a neutral model colour.
Rgb8 band_color(double distance);

struct GaugeState {
    double left_gauge = kSafeRange;   // clamped to [0, 0.06]
    double right_gauge = kSafeRange;
    Zone left_zone = Zone::Safe;
    Zone right_zone = Zone::Safe;
    Band band = Band::Neutral;
    Rgb8 model_color{};
};

/// Throws InvalidArgument for negative or NaN distances.
GaugeState gauge_state(double d_left, double d_right);

/// Per-frame minima for the two arms (left = PSM2, right = PSM1 after alignment).
struct ProximityReport {
    std::size_t frame = 0;
    DistanceResult left;
    DistanceResult right;
    double d_left() const { return left.distance; }
    double d_right() const { return right.distance; }
};

nlohmann::json to_json(const GaugeState& g);

}  // namespace arsafe::proximity
