#include "arsafe/geom/camera.hpp"

#include "arsafe/error.hpp"

#include <cmath>
#include <string>

namespace arsafe::geom {

bool CameraIntrinsics::has_distortion() const {
    for (double c : distortion) {
        if (c != 0.0) return true;
    }
    return false;
}

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("focal lengths must be positive");
    if (width <= 0 || height <= 0) throw InvalidArgument("image size must be positive");
    if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
        throw InvalidArgument("principal point (" + std::to_string(cx) + "," + std::to_string(cy) +
                              ") outside the image");
    }
    for (double c : distortion) {
        if (!std::isfinite(c)) throw InvalidArgument("distortion coefficients must be finite");
    }
}

CameraIntrinsics make_intrinsics(double fx, double fy, double cx, double cy, int width, int height) {
    CameraIntrinsics k;
    k.fx = fx;
    k.fy = fy;
    k.cx = cx;
    k.cy = cy;
    k.width = width;
    k.height = height;
    return k;
}

Vec2 distort_normalized(const CameraIntrinsics& k, const Vec2& xn) {
    const double x = xn.x();
    const double y = xn.y();
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (k.k1() + r2 * (k.k2() + r2 * k.k3()));
    const double dx = 2.0 * k.p1() * x * y + k.p2() * (r2 + 2.0 * x * x);
    const double dy = k.p1() * (r2 + 2.0 * y * y) + 2.0 * k.p2() * x * y;
    return {x * radial + dx, y * radial + dy};
}

std::optional<Vec2> project_point(const CameraIntrinsics& k, const Vec3& p) {
    if (!(p.z() > 0.0)) return std::nullopt;
    const Vec2 xd = distort_normalized(k, Vec2(p.x() / p.z(), p.y() / p.z()));
    return Vec2(k.fx * xd.x() + k.cx, k.fy * xd.y() + k.cy);
}

UndistortedPoint undistort_point(const CameraIntrinsics& k, const Vec2& pixel) {
    constexpr int kMaxIterations = 20;
    constexpr double kPixelTol = 1e-6;
    const Vec2 xd((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy);
    UndistortedPoint out;
    out.normalized = xd;
    if (!k.has_distortion()) {
        out.converged = true;
        return out;
    }
    auto pixel_error = [&](const Vec2& x) {
        const Vec2 d = distort_normalized(k, x);
        return std::hypot(k.fx * d.x() + k.cx - pixel.x(), k.fy * d.y() + k.cy - pixel.y());
    };
    Vec2 x = xd;
    for (int it = 0; it < kMaxIterations; ++it) {
        const double r2 = x.squaredNorm();
        const double radial = 1.0 + r2 * (k.k1() + r2 * (k.k2() + r2 * k.k3()));
        const double dx = 2.0 * k.p1() * x.x() * x.y() + k.p2() * (r2 + 2.0 * x.x() * x.x());
        const double dy = k.p1() * (r2 + 2.0 * x.y() * x.y()) + 2.0 * k.p2() * x.x() * x.y();
        x = Vec2((xd.x() - dx) / radial, (xd.y() - dy) / radial);
        if (!x.allFinite()) break;
        if (pixel_error(x) < 0.01 * kPixelTol) break;
    }
    out.normalized = x;
    out.converged = x.allFinite() && pixel_error(x) <= kPixelTol;
    return out;
}

std::vector<UndistortedPoint> undistort_points(const CameraIntrinsics& k, std::span<const Vec2> pixels) {
    for (double c : k.distortion) {
        if (!std::isfinite(c)) throw InvalidArgument("distortion coefficients must be finite");
    }
    std::vector<UndistortedPoint> out;
    out.reserve(pixels.size());
    for (const auto& px : pixels) out.push_back(undistort_point(k, px));
    return out;
}

CameraIntrinsics scale_intrinsics(const CameraIntrinsics& k, int new_width, int new_height) {
    if (new_width <= 0 || new_height <= 0) throw InvalidArgument("scaled size must be positive");
    const double sx = static_cast<double>(new_width) / k.width;
    const double sy = static_cast<double>(new_height) / k.height;
    CameraIntrinsics s = k;
    s.fx = k.fx * sx;
    s.fy = k.fy * sy;
    s.cx = (k.cx + 0.5) * sx - 0.5;
    s.cy = (k.cy + 0.5) * sy - 0.5;
    s.width = new_width;
    s.height = new_height;
    return s;
}

const RectifiedGeometry& StereoRig::rect() const {
    if (!rectified) throw InvalidArgument("stereo rig has not been rectified");
    return *rectified;
}

StereoRig stereo_rectify(const StereoRig& rig) {
    if (rig.left_to_right.from() != FrameId::L_CAM || rig.left_to_right.to() != FrameId::R_CAM) {
        throw FrameMismatch("stereo extrinsics must map L_CAM to R_CAM");
    }
    const Vec3 t = rig.left_to_right.translation();
    if (!(t.norm() > 0.0)) throw DegenerateInput("stereo rig has zero baseline");

    // X_r = R X_l + t. With R = H H: H X_l and H^T X_r share orientation and differ by H^T t.
    const Eigen::AngleAxisd aa(rig.left_to_right.rotation());
    const Mat3 half = Eigen::AngleAxisd(0.5 * aa.angle(), aa.axis()).toRotationMatrix();
    const Vec3 shared_t = half.transpose() * t;

    // New x axis points from the left to the right camera center.
    const Vec3 e1 = -shared_t.normalized();
    Vec3 e2 = Vec3::UnitZ().cross(e1);
    if (e2.norm() < 1e-12) throw DegenerateInput("baseline is parallel to the optical axis");
    e2.normalize();
    const Vec3 e3 = e1.cross(e2);
    Mat3 align;
    align.row(0) = e1.transpose();
    align.row(1) = e2.transpose();
    align.row(2) = e3.transpose();

    RectifiedGeometry geo{
        CameraIntrinsics{},
        RigidTransform(orthonormalize(align * half), Vec3::Zero(), FrameId::L_CAM, FrameId::Rec_L_CAM),
        RigidTransform(orthonormalize(align * half.transpose()), Vec3::Zero(), FrameId::R_CAM, FrameId::Rec_R_CAM),
        0.0};
    const double f = 0.5 * (rig.left.fy + rig.right.fy);
    geo.k_rect = make_intrinsics(f, f, 0.5 * (rig.left.cx + rig.right.cx), 0.5 * (rig.left.cy + rig.right.cy),
                                 rig.left.width, rig.left.height);
    geo.focal = f;

    StereoRig out = rig;
    out.rectified = geo;
    return out;
}

StereoRig make_rectified_rig(const CameraIntrinsics& k, double baseline) {
    if (!(baseline > 0.0)) throw InvalidArgument("baseline must be positive");
    StereoRig rig;
    rig.left = k;
    rig.left.distortion = {0, 0, 0, 0, 0};
    rig.right = rig.left;
    rig.left_to_right = RigidTransform(Mat3::Identity(), Vec3(-baseline, 0.0, 0.0), FrameId::L_CAM, FrameId::R_CAM);
    return stereo_rectify(rig);
}

StereoRig scale_rig(const StereoRig& rig, int new_width, int new_height) {
    StereoRig out = rig;
    out.left = scale_intrinsics(rig.left, new_width, new_height);
    out.right = scale_intrinsics(rig.right, new_width, new_height);
    if (rig.rectified) {
        out.rectified->k_rect = scale_intrinsics(rig.rectified->k_rect, new_width, new_height);
        out.rectified->focal = out.rectified->k_rect.fx;
    }
    return out;
}

}  // namespace arsafe::geom
