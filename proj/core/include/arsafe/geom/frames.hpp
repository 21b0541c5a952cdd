#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace arsafe::geom {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Named coordinate frames of the robot/camera chain.
///
/// EE1/EE2 are the right/left end-effector kinematic frames (EE2 is the arm used for
/// hand-eye calibration and shares the ECM reference), L_CAM/R_CAM the raw stereo
/// cameras, Rec_* their rectified counterparts, BL the pre-operative model frame, and
/// Board the planar calibration target.
enum class FrameId : std::uint8_t { EE1, EE2, ECM, L_CAM, R_CAM, Rec_L_CAM, Rec_R_CAM, BL, Board };

std::string_view to_string(FrameId id);
FrameId frame_from_string(std::string_view name);

/// Rigid motion mapping coordinates expressed in `from()` to coordinates in `to()`.
///
/// The constructor rejects rotations that are not orthonormal with det +1 (1e-9).
class RigidTransform {
public:
    RigidTransform(FrameId from, FrameId to);
    RigidTransform(const Mat3& rotation, const Vec3& translation, FrameId from, FrameId to);

    static RigidTransform identity(FrameId frame) { return RigidTransform(frame, frame); }

    const Mat3& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }
    FrameId from() const { return from_; }
    FrameId to() const { return to_; }

    Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
    Vec3 rotate(const Vec3& v) const { return rotation_ * v; }
    Mat4 matrix() const;

    RigidTransform inverse() const;

    bool operator==(const RigidTransform&) const = default;

private:
    Mat3 rotation_ = Mat3::Identity();
    Vec3 translation_ = Vec3::Zero();
    FrameId from_;
    FrameId to_;
};

/// `a` maps X to Y, `b` maps Y to Z; the result maps X to Z (b applied after a).
/// Throws FrameMismatch when a.to() != b.from().
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

/// Rotation angle of R in radians, in [0, pi].
double rotation_angle(const Mat3& r);
/// Exponential map of a rotation vector (axis * angle).
Mat3 rotation_from_vector(const Vec3& rotvec);
/// Projects a near-rotation onto SO(3) (closest orthonormal matrix, det +1).
Mat3 orthonormalize(const Mat3& r);

/// Labeled transforms between frames. An edge may be looked up in either direction.
class FrameGraph {
public:
    void set(const RigidTransform& t);
    bool has(FrameId from, FrameId to) const;
    /// Direct edge or inverse of the reverse edge. Throws MissingTransform.
    RigidTransform get(FrameId from, FrameId to) const;
    /// Composes a chain of stored edges found by breadth-first search. Throws MissingTransform.
    RigidTransform resolve(FrameId from, FrameId to) const;

    std::vector<RigidTransform> edges() const;

private:
    std::map<std::pair<FrameId, FrameId>, RigidTransform> edges_;
};

}  // namespace arsafe::geom
