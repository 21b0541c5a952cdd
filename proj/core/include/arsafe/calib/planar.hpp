#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/camera.hpp"
#include "arsafe/geom/frames.hpp"

#include <optional>
#include <span>
#include <vector>

namespace arsafe::calib {

using geom::CameraIntrinsics;
using geom::FrameId;
using geom::Mat3;
using geom::RigidTransform;
using geom::Vec2;
using geom::Vec3;

/// Inner-corner grid of a planar chessboard target.
struct ChessboardSpec {
    int rows = 9;
    int cols = 6;
    double square_size = 0.01;  // meters

    void validate() const;
};

/// Corner (r, c) sits at (c*s, r*s, 0) in the Board frame; rows outer, columns inner.
std::vector<Vec3> chessboard_model(const ChessboardSpec& spec);

/// One image of the planar target. `pose` maps Board into the camera frame once known.
struct PlanarView {
    std::vector<Vec3> object_points;
    std::vector<Vec2> image_points;
    std::optional<RigidTransform> pose;

    void validate() const;
};

/// Normalized DLT homography mapping (x, y) of planar points to pixels.
/// Throws InvalidArgument for fewer than 4 points and DegenerateInput for collinear sets.
Mat3 estimate_homography(std::span<const Vec2> plane, std::span<const Vec2> pixels);
Mat3 estimate_homography(const PlanarView& view);

/// Closed-form intrinsics from at least 3 homographies (zero skew enforced, no distortion).
CameraIntrinsics zhang_intrinsics(std::span<const Mat3> homographies, int width, int height);

/// Board-to-camera pose implied by a homography and undistorted intrinsics.
RigidTransform pose_from_homography(const Mat3& h, const CameraIntrinsics& k, FrameId from = FrameId::Board,
                                    FrameId to = FrameId::L_CAM);

struct RefineOptions {
    int max_iterations = 100;
    bool estimate_distortion = true;  // k1, k2
};

struct CalibrationResult {
    CameraIntrinsics intrinsics;
    std::vector<RigidTransform> poses;  // per view, Board -> camera
    double initial_error = 0.0;         // E_cam before refinement, pixels
    double final_error = 0.0;           // E_cam after refinement, pixels
    int iterations = 0;
    std::vector<double> error_history;  // E_cam after each accepted step (first entry = initial)
};

/// Levenberg-Marquardt over fx, fy, cx, cy, k1, k2 and every view pose. Views without
/// a pose are initialised by planar PnP. Throws SolverFailure when the first five trial
/// steps all increase the error.
CalibrationResult refine_calibration(const CameraIntrinsics& init, const std::vector<PlanarView>& views,
                                     const RefineOptions& options = {});

/// Homographies, closed-form intrinsics, then refinement.
CalibrationResult calibrate_camera(const std::vector<PlanarView>& views, int width, int height,
                                   const RefineOptions& options = {});

/// RMS pixel distance between projected and observed corners over all views. Views
/// lacking a pose are posed by planar PnP first.
double camera_reprojection_error(const std::vector<PlanarView>& views, const CameraIntrinsics& k);

/// RMS of |a_i - b_i| over paired pixel lists.
double rms_pixel_error(std::span<const Vec2> projected, std::span<const Vec2> observed);

}  // namespace arsafe::calib
