#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/camera.hpp"
#include "arsafe/geom/frames.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace arsafe::calib {

using geom::CameraIntrinsics;
using geom::FrameId;
using geom::RigidTransform;
using geom::Vec2;
using geom::Vec3;

/// Pose of a camera observing `obj` (frame `from`) at pixels `img`; result maps `from`
/// into the camera frame `to`. Coplanar sets (4+) use homography decomposition, general
/// sets (6+) a DLT; both are refined by Gauss-Newton on pixel error (50 iterations,
/// step halving).
RigidTransform solve_pnp(std::span<const Vec3> obj, std::span<const Vec2> img, const CameraIntrinsics& k,
                         FrameId from = FrameId::Board, FrameId to = FrameId::L_CAM);

/// Gauss-Newton refinement of an initial pose on pixel error.
RigidTransform refine_pnp(std::span<const Vec3> obj, std::span<const Vec2> img, const CameraIntrinsics& k,
                          const RigidTransform& init);

struct RansacParams {
    int iterations = 1000;
    double inlier_px = 2.0;
    double min_inlier_fraction = 0.5;
    std::uint64_t seed = 0;
};

struct PnpRansacResult {
    RigidTransform pose;
    std::vector<std::size_t> inliers;  // ascending indices with reprojection error < inlier_px
};

/// Minimal-sample RANSAC around solve_pnp; each iteration draws from its own sub-seed so
/// results do not depend on evaluation order. Throws NoConsensus when the best set holds
/// fewer than min_inlier_fraction of the points.
PnpRansacResult pnp_ransac(std::span<const Vec3> obj, std::span<const Vec2> img, const CameraIntrinsics& k,
                           const RansacParams& params = {}, FrameId from = FrameId::Board,
                           FrameId to = FrameId::L_CAM);

/// End-effector tip positions (ECM) and where the tip appears in the raw left image.
struct HandEyeSet {
    std::vector<Vec3> ee_points;
    std::vector<Vec2> image_points;

    void validate() const;
};

/// T_ECM^L_CAM by PnP-RANSAC over the hand-eye correspondences.
PnpRansacResult hand_eye_calibrate(const HandEyeSet& set, const CameraIntrinsics& k, const RansacParams& params = {});

/// RMS pixel error of ee_points projected through `t` (ECM -> L_CAM) and `k`.
double hand_eye_error(const HandEyeSet& set, const RigidTransform& t, const CameraIntrinsics& k);

/// Pixel reprojection error of each point; +inf for points at or behind the camera.
std::vector<double> reprojection_errors(std::span<const Vec3> obj, std::span<const Vec2> img,
                                        const CameraIntrinsics& k, const RigidTransform& pose);

}  // namespace arsafe::calib
