#pragma once

#include "arsafe/geom/frames.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace arsafe::geom {

/// Pinhole intrinsics with the 5-coefficient radial-tangential distortion model
/// (k1, k2, p1, p2, k3), the same ordering calibration files use.
struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    std::array<double, 5> distortion{0.0, 0.0, 0.0, 0.0, 0.0};
    int width = 1;
    int height = 1;

    double k1() const { return distortion[0]; }
    double k2() const { return distortion[1]; }
    double p1() const { return distortion[2]; }
    double p2() const { return distortion[3]; }
    double k3() const { return distortion[4]; }
    bool has_distortion() const;

    /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies in the image.
    void validate() const;

    bool operator==(const CameraIntrinsics&) const = default;
};

CameraIntrinsics make_intrinsics(double fx, double fy, double cx, double cy, int width, int height);

/// Applies the distortion model to normalized image coordinates.
Vec2 distort_normalized(const CameraIntrinsics& k, const Vec2& xn);

/// Projects a camera-frame point to pixels. Returns nullopt for z <= 0 (culled).
std::optional<Vec2> project_point(const CameraIntrinsics& k, const Vec3& p);

struct UndistortedPoint {
    Vec2 normalized = Vec2::Zero();
    bool converged = false;
};

/// Inverts the distortion by fixed-point iteration (at most 20 iterations). A point whose
/// re-projection misses the input pixel by more than 1e-6 px is flagged non-converged.
std::vector<UndistortedPoint> undistort_points(const CameraIntrinsics& k, std::span<const Vec2> pixels);
UndistortedPoint undistort_point(const CameraIntrinsics& k, const Vec2& pixel);

/// Resamples intrinsics to a new image size with pixel-center alignment.
CameraIntrinsics scale_intrinsics(const CameraIntrinsics& k, int new_width, int new_height);

/// Shared rectified camera plus the rotations taking each raw camera into it.
struct RectifiedGeometry {
    CameraIntrinsics k_rect;          // zero distortion, identical for both sides
    RigidTransform left_to_rect;      // L_CAM -> Rec_L_CAM, pure rotation
    RigidTransform right_to_rect;     // R_CAM -> Rec_R_CAM, pure rotation
    double focal = 0.0;               // f of the depth/disparity relation, pixels
};

enum class StereoSide { Left, Right };

struct StereoRig {
    CameraIntrinsics left;
    CameraIntrinsics right;
    RigidTransform left_to_right{FrameId::L_CAM, FrameId::R_CAM};  // maps L_CAM coordinates to R_CAM
    std::optional<RectifiedGeometry> rectified;

    /// Distance between the camera centers, meters.
    double baseline() const { return left_to_right.translation().norm(); }
    const RectifiedGeometry& rect() const;
};

/// Symmetric split-rotation rectification: each camera is rotated by half the relative
/// rotation, then both by a common rotation that puts the baseline on +x.
/// Throws DegenerateInput for a zero baseline.
StereoRig stereo_rectify(const StereoRig& rig);

/// Rig whose cameras are already row-aligned (identity rotation, x-only baseline, no distortion).
StereoRig make_rectified_rig(const CameraIntrinsics& k, double baseline);

/// Rescales a rig (raw and rectified intrinsics) to a new resolution.
StereoRig scale_rig(const StereoRig& rig, int new_width, int new_height);

}  // namespace arsafe::geom
