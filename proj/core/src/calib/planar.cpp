#include "arsafe/calib/planar.hpp"

#include "arsafe/calib/pnp.hpp"
#include "arsafe/error.hpp"

#include "../detail/least_squares.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace arsafe::calib {

namespace {

// Similarity that moves a point set to zero mean and mean distance sqrt(2).
Mat3 normalizing_transform(std::span<const Vec2> pts) {
    Vec2 c = Vec2::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    double d = 0.0;
    for (const auto& p : pts) d += (p - c).norm();
    d /= static_cast<double>(pts.size());
    const double s = d > 0.0 ? std::sqrt(2.0) / d : 1.0;
    Mat3 t;
    t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
    return t;
}

bool collinear(std::span<const Vec2> pts) {
    Vec2 c = Vec2::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0] <= 1e-12 * std::max(es.eigenvalues()[1], 1e-300);
}

constexpr int kIntrinsicParams = 6;  // fx fy cx cy k1 k2

}  // namespace

void ChessboardSpec::validate() const {
    if (rows < 3 || cols < 3) throw InvalidArgument("chessboard needs at least 3x3 inner corners");
    if (!(square_size > 0.0)) throw InvalidArgument("chessboard square size must be positive");
}

std::vector<Vec3> chessboard_model(const ChessboardSpec& spec) {
    spec.validate();
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(spec.rows * spec.cols));
    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) pts.emplace_back(c * spec.square_size, r * spec.square_size, 0.0);
    }
    return pts;
}

void PlanarView::validate() const {
    if (object_points.size() != image_points.size()) throw InvalidArgument("view object/image point counts differ");
    if (object_points.size() < 4) throw InvalidArgument("view needs at least 4 points");
}

Mat3 estimate_homography(std::span<const Vec2> plane, std::span<const Vec2> pixels) {
    if (plane.size() != pixels.size()) throw InvalidArgument("homography: point counts differ");
    if (plane.size() < 4) {
        throw InvalidArgument("homography needs at least 4 correspondences, got " + std::to_string(plane.size()));
    }
    if (collinear(plane) || collinear(pixels)) throw DegenerateInput("homography: points are collinear");
    const Mat3 ta = normalizing_transform(plane);
    const Mat3 tb = normalizing_transform(pixels);
    const auto n = static_cast<Eigen::Index>(plane.size());
    Eigen::MatrixXd a(2 * n, 9);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 x = ta * Vec3(plane[i].x(), plane[i].y(), 1.0);
        const Vec3 y = tb * Vec3(pixels[i].x(), pixels[i].y(), 1.0);
        a.row(2 * i) << 0, 0, 0, -x.x(), -x.y(), -1, y.y() * x.x(), y.y() * x.y(), y.y();
        a.row(2 * i + 1) << x.x(), x.y(), 1, 0, 0, 0, -y.x() * x.x(), -y.x() * x.y(), -y.x();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (s.size() >= 8 && s[7] <= 1e-12 * s[0]) throw DegenerateInput("homography: rank-deficient design matrix");
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Mat3 hn;
    hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
    Mat3 out = tb.inverse() * hn * ta;
    if (std::abs(out(2, 2)) > 1e-300) out /= out(2, 2);
    return out;
}

Mat3 estimate_homography(const PlanarView& view) {
    view.validate();
    std::vector<Vec2> plane;
    plane.reserve(view.object_points.size());
    for (const auto& p : view.object_points) {
        if (std::abs(p.z()) > 1e-12) throw InvalidArgument("planar view object points must lie on z = 0");
        plane.emplace_back(p.x(), p.y());
    }
    return estimate_homography(plane, view.image_points);
}

CameraIntrinsics zhang_intrinsics(std::span<const Mat3> homographies, int width, int height) {
    if (homographies.size() < 3) {
        throw InvalidArgument("Zhang calibration needs at least 3 views, got " + std::to_string(homographies.size()));
    }
    auto v = [](const Mat3& h, int i, int j) {
        Eigen::Matrix<double, 1, 6> r;
        r << h(0, i) * h(0, j), h(0, i) * h(1, j) + h(1, i) * h(0, j), h(1, i) * h(1, j),
            h(2, i) * h(0, j) + h(0, i) * h(2, j), h(2, i) * h(1, j) + h(1, i) * h(2, j), h(2, i) * h(2, j);
        return r;
    };
    const auto m = static_cast<Eigen::Index>(homographies.size());
    Eigen::MatrixXd a(2 * m + 1, 6);
    for (Eigen::Index k = 0; k < m; ++k) {
        // Scale each homography for conditioning; the constraints are homogeneous.
        Mat3 h = homographies[static_cast<std::size_t>(k)];
        h /= h.norm();
        a.row(2 * k) = v(h, 0, 1);
        a.row(2 * k + 1) = v(h, 0, 0) - v(h, 1, 1);
    }
    a.row(2 * m) << 0, 1, 0, 0, 0, 0;  // zero skew
    // Column scaling keeps the tiny B13/B23/B33 terms from being swamped.
    Eigen::Matrix<double, 6, 1> colscale;
    for (int c = 0; c < 6; ++c) {
        const double nrm = a.col(c).norm();
        colscale[c] = nrm > 0.0 ? 1.0 / nrm : 1.0;
        a.col(c) *= colscale[c];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (s[4] <= 1e-12 * s[0]) throw DegenerateInput("Zhang calibration: views do not constrain the intrinsics");
    Eigen::Matrix<double, 6, 1> b = svd.matrixV().col(5).cwiseProduct(colscale);
    if (b[0] < 0.0) b = -b;
    const double b11 = b[0], b12 = b[1], b22 = b[2], b13 = b[3], b23 = b[4], b33 = b[5];
    const double den = b11 * b22 - b12 * b12;
    if (!(b11 > 0.0) || !(den > 0.0)) throw DegenerateInput("Zhang calibration: ill-conditioned B matrix");
    const double v0 = (b12 * b13 - b11 * b23) / den;
    const double lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
    if (!(lambda / b11 > 0.0) || !(lambda * b11 / den > 0.0)) {
        throw DegenerateInput("Zhang calibration: ill-conditioned B matrix");
    }
    const double alpha = std::sqrt(lambda / b11);
    const double beta = std::sqrt(lambda * b11 / den);
    const double gamma = -b12 * alpha * alpha * beta / lambda;
    const double u0 = gamma * v0 / beta - b13 * alpha * alpha / lambda;
    CameraIntrinsics k = geom::make_intrinsics(alpha, beta, u0, v0, width, height);
    if (!(k.fx > 0.0) || !(k.fy > 0.0) || !std::isfinite(k.cx) || !std::isfinite(k.cy)) {
        throw DegenerateInput("Zhang calibration produced invalid intrinsics");
    }
    return k;
}

RigidTransform pose_from_homography(const Mat3& h, const CameraIntrinsics& k, FrameId from, FrameId to) {
    Mat3 kmat;
    kmat << k.fx, 0, k.cx, 0, k.fy, k.cy, 0, 0, 1;
    const Mat3 g = kmat.inverse() * h;
    double lambda = 2.0 / (g.col(0).norm() + g.col(1).norm());
    if (g(2, 2) * lambda < 0.0) lambda = -lambda;
    Mat3 r;
    r.col(0) = g.col(0) * lambda;
    r.col(1) = g.col(1) * lambda;
    r.col(2) = r.col(0).cross(r.col(1));
    return RigidTransform(geom::orthonormalize(r), g.col(2) * lambda, from, to);
}

double rms_pixel_error(std::span<const Vec2> projected, std::span<const Vec2> observed) {
    if (projected.size() != observed.size()) throw InvalidArgument("rms_pixel_error: sizes differ");
    if (projected.empty()) throw InvalidArgument("rms_pixel_error: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < projected.size(); ++i) acc += (projected[i] - observed[i]).squaredNorm();
    return std::sqrt(acc / static_cast<double>(projected.size()));
}

namespace {

RigidTransform view_pose(const PlanarView& view, const CameraIntrinsics& k) {
    if (view.pose) return *view.pose;
    return solve_pnp(view.object_points, view.image_points, k, FrameId::Board, FrameId::L_CAM);
}

std::size_t total_points(const std::vector<PlanarView>& views) {
    std::size_t n = 0;
    for (const auto& v : views) n += v.object_points.size();
    return n;
}

}  // namespace

double camera_reprojection_error(const std::vector<PlanarView>& views, const CameraIntrinsics& k) {
    if (views.empty()) throw InvalidArgument("camera_reprojection_error: no views");
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& view : views) {
        view.validate();
        const RigidTransform pose = view_pose(view, k);
        for (std::size_t i = 0; i < view.object_points.size(); ++i) {
            const auto px = geom::project_point(k, pose.apply(view.object_points[i]));
            if (!px) throw DegenerateInput("calibration point projects behind the camera");
            acc += (*px - view.image_points[i]).squaredNorm();
            ++n;
        }
    }
    return std::sqrt(acc / static_cast<double>(n));
}

CalibrationResult refine_calibration(const CameraIntrinsics& init, const std::vector<PlanarView>& views,
                                     const RefineOptions& options) {
    init.validate();
    if (views.empty()) throw InvalidArgument("refine_calibration: no views");
    for (const auto& v : views) v.validate();
    const std::size_t nv = views.size();
    const auto np = static_cast<Eigen::Index>(kIntrinsicParams + 6 * nv);
    const auto nres = static_cast<Eigen::Index>(2 * total_points(views));

    detail::VecX x0(np);
    x0 << init.fx, init.fy, init.cx, init.cy, init.k1(), init.k2();
    for (std::size_t i = 0; i < nv; ++i) {
        const RigidTransform pose = view_pose(views[i], init);
        const Eigen::AngleAxisd aa(pose.rotation());
        const auto o = static_cast<Eigen::Index>(kIntrinsicParams + 6 * i);
        x0.segment<3>(o) = aa.axis() * aa.angle();
        x0.segment<3>(o + 3) = pose.translation();
    }

    auto unpack = [&](const detail::VecX& x) {
        CameraIntrinsics k = init;
        k.fx = x[0];
        k.fy = x[1];
        k.cx = x[2];
        k.cy = x[3];
        k.distortion[0] = options.estimate_distortion ? x[4] : init.k1();
        k.distortion[1] = options.estimate_distortion ? x[5] : init.k2();
        return k;
    };
    auto residuals = [&](const detail::VecX& x) {
        const CameraIntrinsics k = unpack(x);
        detail::VecX r(nres);
        Eigen::Index j = 0;
        for (std::size_t i = 0; i < nv; ++i) {
            const auto o = static_cast<Eigen::Index>(kIntrinsicParams + 6 * i);
            const Mat3 rot = geom::rotation_from_vector(x.segment<3>(o));
            const Vec3 t = x.segment<3>(o + 3);
            const auto& view = views[i];
            for (std::size_t p = 0; p < view.object_points.size(); ++p) {
                const Vec3 pc = rot * view.object_points[p] + t;
                const Vec2 xd = geom::distort_normalized(k, Vec2(pc.x() / pc.z(), pc.y() / pc.z()));
                r[j++] = k.fx * xd.x() + k.cx - view.image_points[p].x();
                r[j++] = k.fy * xd.y() + k.cy - view.image_points[p].y();
            }
        }
        return r;
    };
    auto steps = [&](const detail::VecX& x) {
        detail::VecX h(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (i < 4) {
                h[i] = 1e-6 * std::max(std::abs(x[i]), 1.0);
            } else if (i < kIntrinsicParams) {
                h[i] = 1e-7;
            } else if ((i - kIntrinsicParams) % 6 < 3) {
                h[i] = 1e-7;
            } else {
                h[i] = 1e-7 * std::max(std::abs(x[i]), 1e-3);
            }
        }
        if (!options.estimate_distortion) h[4] = h[5] = 1e-7;
        return h;
    };

    detail::ResidualFn f = residuals;
    if (!options.estimate_distortion) {
        // Freeze k1, k2 by zeroing their effect.
        f = [&, residuals](const detail::VecX& x) {
            detail::VecX y = x;
            y[4] = init.k1();
            y[5] = init.k2();
            return residuals(y);
        };
    }
    detail::LmOptions lm;
    lm.max_iterations = options.max_iterations;
    const auto outcome = detail::levenberg_marquardt(f, x0, lm, steps);
    if (outcome.diverged) throw SolverFailure("camera calibration refinement diverged");

    const double n = static_cast<double>(total_points(views));
    CalibrationResult result;
    result.intrinsics = unpack(outcome.x);
    result.intrinsics.validate();
    for (std::size_t i = 0; i < nv; ++i) {
        const auto o = static_cast<Eigen::Index>(kIntrinsicParams + 6 * i);
        result.poses.emplace_back(geom::rotation_from_vector(outcome.x.segment<3>(o)),
                                  Vec3(outcome.x.segment<3>(o + 3)), FrameId::Board, FrameId::L_CAM);
    }
    result.initial_error = std::sqrt(2.0 * outcome.initial_cost / n);
    result.final_error = std::sqrt(2.0 * outcome.final_cost / n);
    result.iterations = outcome.iterations;
    for (double c : outcome.cost_history) result.error_history.push_back(std::sqrt(2.0 * c / n));
    return result;
}

CalibrationResult calibrate_camera(const std::vector<PlanarView>& views, int width, int height,
                                   const RefineOptions& options) {
    std::vector<Mat3> hs;
    hs.reserve(views.size());
    for (const auto& v : views) hs.push_back(estimate_homography(v));
    CameraIntrinsics init = zhang_intrinsics(hs, width, height);
    // A closed-form principal point can land outside the image on poor data; clamp for the refinement start.
    init.cx = std::clamp(init.cx, 0.0, width - 1.0);
    init.cy = std::clamp(init.cy, 0.0, height - 1.0);
    std::vector<PlanarView> posed = views;
    for (std::size_t i = 0; i < views.size(); ++i) {
        if (!posed[i].pose) posed[i].pose = pose_from_homography(hs[i], init);
    }
    return refine_calibration(init, posed, options);
}

}  // namespace arsafe::calib
