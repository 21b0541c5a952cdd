#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/frames.hpp"

#include <span>
#include <vector>

namespace arsafe::calib {

using geom::FrameId;
using geom::RigidTransform;
using geom::Vec3;

/// Least-squares rigid motion taking p (frame `from`) onto q (frame `to`) by the unit
/// quaternion method. Needs 3+ pairs that are not collinear (middle eigenvalue of the
/// centred covariance > 1e-12 m^2), else DegenerateInput.
RigidTransform horn_align(std::span<const Vec3> p, std::span<const Vec3> q, FrameId from, FrameId to);

/// Same with per-pair weights (all >= 0, positive sum).
RigidTransform horn_align_weighted(std::span<const Vec3> p, std::span<const Vec3> q, std::span<const double> w,
                                   FrameId from, FrameId to);

/// Points touched by both arms: `left` in EE2, `right` in EE1.
struct PointPairSet {
    std::vector<Vec3> left;
    std::vector<Vec3> right;

    void validate() const;
};

/// Solves T_EE1^EE2 from the pairs.
RigidTransform hand_hand_calibrate(const PointPairSet& pairs);

/// RMS of |left_i - T right_i| in meters. `t` must map EE1 to EE2.
double hand_hand_error(const PointPairSet& pairs, const RigidTransform& t);

/// RMS Euclidean residual of |q_i - T p_i| with no frame checks.
double rms_point_error(std::span<const Vec3> p, std::span<const Vec3> q, const RigidTransform& t);

}  // namespace arsafe::calib
