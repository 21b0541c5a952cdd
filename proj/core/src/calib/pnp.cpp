#include "arsafe/calib/pnp.hpp"

#include "arsafe/calib/planar.hpp"
#include "arsafe/error.hpp"
#include "arsafe/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace arsafe::calib {

using geom::Mat3;

namespace {

constexpr int kMaxGaussNewton = 50;
constexpr double kPlanarRatio = 1e-2;

void check_sizes(std::size_t n_obj, std::size_t n_img) {
    if (n_obj != n_img) {
        throw InvalidArgument("object/image point counts differ (" + std::to_string(n_obj) + " vs " +
                              std::to_string(n_img) + ")");
    }
}

struct PlaneFit {
    Vec3 centroid;
    Mat3 axes;  // columns: in-plane major, in-plane minor, normal
    double ratio;
};

PlaneFit fit_plane(std::span<const Vec3> pts) {
    Vec3 c = Vec3::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
    cov /= static_cast<double>(pts.size());
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const auto& ev = es.eigenvalues();  // ascending
    Mat3 axes;
    axes.col(0) = es.eigenvectors().col(2);
    axes.col(1) = es.eigenvectors().col(1);
    axes.col(2) = axes.col(0).cross(axes.col(1));
    return {c, axes, ev[2] > 0.0 ? ev[0] / ev[2] : 1.0};
}

std::vector<Vec2> normalized_points(std::span<const Vec2> img, const CameraIntrinsics& k) {
    std::vector<Vec2> out;
    out.reserve(img.size());
    for (const auto& px : img) out.push_back(geom::undistort_point(k, px).normalized);
    return out;
}

std::optional<RigidTransform> planar_init(std::span<const Vec3> obj, std::span<const Vec2> xn, FrameId from,
                                          FrameId to) {
    const PlaneFit plane = fit_plane(obj);
    std::vector<Vec2> uv;
    uv.reserve(obj.size());
    for (const auto& p : obj) {
        const Vec3 local = plane.axes.transpose() * (p - plane.centroid);
        uv.emplace_back(local.x(), local.y());
    }
    Mat3 h;
    try {
        h = estimate_homography(uv, xn);
    } catch (const DegenerateInput&) {
        return std::nullopt;
    }
    const double n1 = h.col(0).norm();
    const double n2 = h.col(1).norm();
    if (!(n1 > 0.0 && n2 > 0.0)) return std::nullopt;
    double lambda = 2.0 / (n1 + n2);
    if (h(2, 2) * lambda < 0.0) lambda = -lambda;
    const Vec3 r1 = h.col(0) * lambda;
    const Vec3 r2 = h.col(1) * lambda;
    Mat3 r;
    r.col(0) = r1;
    r.col(1) = r2;
    r.col(2) = r1.cross(r2);
    const Mat3 rh = geom::orthonormalize(r);
    const Vec3 th = h.col(2) * lambda;
    const Mat3 rot = rh * plane.axes.transpose();
    if (!rot.allFinite() || !th.allFinite()) return std::nullopt;
    return RigidTransform(geom::orthonormalize(rot), th - rot * plane.centroid, from, to);
}

std::optional<RigidTransform> dlt_init(std::span<const Vec3> obj, std::span<const Vec2> xn, FrameId from, FrameId to) {
    const std::size_t n = obj.size();
    Vec3 c = Vec3::Zero();
    for (const auto& p : obj) c += p;
    c /= static_cast<double>(n);
    double scale = 0.0;
    for (const auto& p : obj) scale += (p - c).norm();
    scale = scale > 0.0 ? std::sqrt(3.0) * static_cast<double>(n) / scale : 1.0;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * static_cast<Eigen::Index>(n), 12);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 q = (obj[i] - c) * scale;
        const Eigen::Vector4d x(q.x(), q.y(), q.z(), 1.0);
        const double u = xn[i].x();
        const double v = xn[i].y();
        const auto r0 = static_cast<Eigen::Index>(2 * i);
        a.block<1, 4>(r0, 0) = x.transpose();
        a.block<1, 4>(r0, 8) = -u * x.transpose();
        a.block<1, 4>(r0 + 1, 4) = x.transpose();
        a.block<1, 4>(r0 + 1, 8) = -v * x.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (s.size() < 12 || s[10] <= 1e-10 * s[0]) return std::nullopt;
    const Eigen::VectorXd p = svd.matrixV().col(11);
    Eigen::Matrix<double, 3, 4> pm;
    pm << p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9], p[10], p[11];
    Mat3 m = pm.leftCols<3>();
    Vec3 t = pm.col(3);
    if (m.determinant() < 0.0) {
        m = -m;
        t = -t;
    }
    // With q = scale (X - c): x_cam = R X + t, so M = s R / scale and p4 = s (R c + t).
    Eigen::JacobiSVD<Mat3> ms(m);
    const double sm = ms.singularValues().mean();
    if (!(sm > 0.0)) return std::nullopt;
    const Mat3 r = geom::orthonormalize(m);
    const Vec3 trans = t / (sm * scale) - r * c;
    if (!r.allFinite() || !trans.allFinite()) return std::nullopt;
    return RigidTransform(r, trans, from, to);
}

double pixel_cost(std::span<const Vec3> obj, std::span<const Vec2> img, const CameraIntrinsics& k, const Mat3& r,
                  const Vec3& t) {
    double cost = 0.0;
    for (std::size_t i = 0; i < obj.size(); ++i) {
        const auto px = geom::project_point(k, r * obj[i] + t);
        if (!px) return std::numeric_limits<double>::infinity();
        cost += (*px - img[i]).squaredNorm();
    }
    return cost;
}

}  // namespace

std::vector<double> reprojection_errors(std::span<const Vec3> obj, std::span<const Vec2> img,
                                        const CameraIntrinsics& k, const RigidTransform& pose) {
    check_sizes(obj.size(), img.size());
    std::vector<double> err(obj.size());
    for (std::size_t i = 0; i < obj.size(); ++i) {
        const auto px = geom::project_point(k, pose.apply(obj[i]));
        err[i] = px ? (*px - img[i]).norm() : std::numeric_limits<double>::infinity();
    }
    return err;
}

RigidTransform refine_pnp(std::span<const Vec3> obj, std::span<const Vec2> img, const CameraIntrinsics& k,
                          const RigidTransform& init) {
    check_sizes(obj.size(), img.size());
    Mat3 r = init.rotation();
    Vec3 t = init.translation();
    double cost = pixel_cost(obj, img, k, r, t);
    if (!std::isfinite(cost)) return init;
    const std::size_t n = obj.size();
    Eigen::MatrixXd jac(2 * n, 6);
    Eigen::VectorXd res(2 * n);
    for (int it = 0; it < kMaxGaussNewton && cost > 0.0; ++it) {
        // Left-multiplied perturbation: R' = exp(w) R, t' = t + dt. Jacobian by central differences.
        auto residuals = [&](const Mat3& rr, const Vec3& tt, Eigen::VectorXd& out) {
            for (std::size_t i = 0; i < n; ++i) {
                const Vec3 pc = rr * obj[i] + tt;
                const Vec2 xd = geom::distort_normalized(k, Vec2(pc.x() / pc.z(), pc.y() / pc.z()));
                out[2 * i] = k.fx * xd.x() + k.cx - img[i].x();
                out[2 * i + 1] = k.fy * xd.y() + k.cy - img[i].y();
            }
        };
        residuals(r, t, res);
        Eigen::VectorXd rp(2 * n), rm(2 * n);
        const double hr = 1e-7;
        const double ht = 1e-7 * std::max(1e-3, t.norm());
        for (int j = 0; j < 6; ++j) {
            Vec3 w = Vec3::Zero();
            Vec3 dt = Vec3::Zero();
            double h = 0.0;
            if (j < 3) {
                w[j] = hr;
                h = hr;
                residuals(geom::rotation_from_vector(w) * r, t, rp);
                residuals(geom::rotation_from_vector(-w) * r, t, rm);
            } else {
                dt[j - 3] = ht;
                h = ht;
                residuals(r, t + dt, rp);
                residuals(r, t - dt, rm);
            }
            jac.col(j) = (rp - rm) / (2.0 * h);
        }
        const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
        const Eigen::Matrix<double, 6, 1> g = jac.transpose() * res;
        Eigen::Matrix<double, 6, 1> step = jtj.ldlt().solve(-g);
        if (!step.allFinite()) break;
        bool improved = false;
        for (int half = 0; half < 30; ++half) {
            const Mat3 rn = geom::orthonormalize(geom::rotation_from_vector(step.head<3>()) * r);
            const Vec3 tn = t + step.tail<3>();
            const double cn = pixel_cost(obj, img, k, rn, tn);
            if (cn < cost) {
                r = rn;
                t = tn;
                const double rel = (cost - cn) / std::max(cost, 1e-300);
                cost = cn;
                improved = rel > 1e-15;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    return RigidTransform(r, t, init.from(), init.to());
}

RigidTransform solve_pnp(std::span<const Vec3> obj, std::span<const Vec2> img, const CameraIntrinsics& k, FrameId from,
                         FrameId to) {
    check_sizes(obj.size(), img.size());
    if (obj.size() < 4) throw InvalidArgument("PnP needs at least 4 points, got " + std::to_string(obj.size()));
    const std::vector<Vec2> xn = normalized_points(img, k);
    const PlaneFit plane = fit_plane(obj);

    std::vector<RigidTransform> candidates;
    if (plane.ratio < kPlanarRatio) {
        if (auto p = planar_init(obj, xn, from, to)) candidates.push_back(*p);
    }
    if (obj.size() >= 6 && plane.ratio > 1e-12) {
        if (auto p = dlt_init(obj, xn, from, to)) candidates.push_back(*p);
    }
    if (candidates.empty()) {
        if (obj.size() < 6 && plane.ratio >= kPlanarRatio) {
            throw InvalidArgument("non-coplanar PnP needs at least 6 points, got " + std::to_string(obj.size()));
        }
        throw DegenerateInput("PnP point configuration is degenerate");
    }
    std::optional<RigidTransform> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        const RigidTransform refined = refine_pnp(obj, img, k, c);
        const double cost = pixel_cost(obj, img, k, refined.rotation(), refined.translation());
        if (cost < best_cost) {
            best_cost = cost;
            best = refined;
        }
    }
    if (!best || !std::isfinite(best_cost)) throw DegenerateInput("PnP found no pose with all points in front of the camera");
    return *best;
}

PnpRansacResult pnp_ransac(std::span<const Vec3> obj, std::span<const Vec2> img, const CameraIntrinsics& k,
                           const RansacParams& params, FrameId from, FrameId to) {
    check_sizes(obj.size(), img.size());
    if (params.iterations <= 0) throw InvalidArgument("RANSAC needs a positive iteration count");
    if (!(params.inlier_px >= 0.0)) throw InvalidArgument("inlier threshold must be non-negative");
    const std::size_t n = obj.size();
    const bool planar = n >= 4 && fit_plane(obj).ratio < kPlanarRatio;
    const std::size_t sample_size = planar ? 4 : 6;
    if (n < sample_size) {
        throw InvalidArgument("RANSAC needs at least " + std::to_string(sample_size) + " points, got " +
                              std::to_string(n));
    }
    const auto required = static_cast<std::size_t>(std::ceil(params.min_inlier_fraction * static_cast<double>(n)));
    const std::vector<Vec2> xn = normalized_points(img, k);

    auto score = [&](const RigidTransform& pose, std::vector<std::size_t>& inliers, double& total) {
        inliers.clear();
        total = 0.0;
        const auto err = reprojection_errors(obj, img, k, pose);
        for (std::size_t i = 0; i < n; ++i) {
            if (err[i] < params.inlier_px) {
                inliers.push_back(i);
                total += err[i];
            }
        }
    };

    std::vector<std::size_t> best_inliers;
    double best_total = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> sample(sample_size);
    std::vector<Vec3> so(sample_size);
    std::vector<Vec2> sx(sample_size);
    std::vector<std::size_t> inliers;
    for (int it = 0; it < params.iterations; ++it) {
        Rng rng = make_rng(params.seed, static_cast<std::uint64_t>(it));
        for (std::size_t j = 0; j < sample_size; ++j) {
            std::size_t idx = 0;
            do {
                idx = uniform_index(rng, n);
            } while (std::find(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(j), idx) !=
                     sample.begin() + static_cast<std::ptrdiff_t>(j));
            sample[j] = idx;
            so[j] = obj[idx];
            sx[j] = xn[idx];
        }
        std::optional<RigidTransform> pose;
        try {
            pose = planar ? planar_init(so, sx, from, to) : dlt_init(so, sx, from, to);
        } catch (const Error&) {
            pose.reset();
        }
        if (!pose) continue;
        double total = 0.0;
        score(*pose, inliers, total);
        if (inliers.size() > best_inliers.size() || (inliers.size() == best_inliers.size() && total < best_total)) {
            best_inliers = inliers;
            best_total = total;
        }
    }
    if (best_inliers.size() < std::max<std::size_t>(required, sample_size)) {
        throw NoConsensus("PnP-RANSAC: best consensus set has " + std::to_string(best_inliers.size()) + " of " +
                          std::to_string(n) + " points, need " + std::to_string(std::max(required, sample_size)));
    }

    PnpRansacResult result{RigidTransform(from, to), best_inliers};
    for (int round = 0; round < 5; ++round) {
        std::vector<Vec3> io;
        std::vector<Vec2> ii;
        for (std::size_t i : result.inliers) {
            io.push_back(obj[i]);
            ii.push_back(img[i]);
        }
        result.pose = solve_pnp(io, ii, k, from, to);
        double total = 0.0;
        score(result.pose, inliers, total);
        if (inliers == result.inliers) break;
        if (inliers.size() < std::max(required, sample_size)) break;
        result.inliers = inliers;
    }
    if (result.inliers.size() < std::max(required, sample_size)) {
        throw NoConsensus("PnP-RANSAC: refined consensus set too small");
    }
    return result;
}

void HandEyeSet::validate() const {
    if (ee_points.size() != image_points.size()) throw InvalidArgument("hand-eye point/pixel counts differ");
    if (ee_points.size() < 6) throw InvalidArgument("hand-eye calibration needs at least 6 points");
}

PnpRansacResult hand_eye_calibrate(const HandEyeSet& set, const CameraIntrinsics& k, const RansacParams& params) {
    set.validate();
    return pnp_ransac(set.ee_points, set.image_points, k, params, FrameId::ECM, FrameId::L_CAM);
}

double hand_eye_error(const HandEyeSet& set, const RigidTransform& t, const CameraIntrinsics& k) {
    if (t.from() != FrameId::ECM || t.to() != FrameId::L_CAM) {
        throw FrameMismatch("hand-eye transform must map ECM to L_CAM");
    }
    if (set.ee_points.size() != set.image_points.size()) throw InvalidArgument("hand-eye point/pixel counts differ");
    if (set.ee_points.empty()) throw InvalidArgument("hand-eye set is empty");
    std::vector<Vec2> projected;
    projected.reserve(set.ee_points.size());
    for (const auto& p : set.ee_points) {
        const auto px = geom::project_point(k, t.apply(p));
        if (!px) throw DegenerateInput("hand-eye point projects behind the camera");
        projected.push_back(*px);
    }
    return rms_pixel_error(projected, set.image_points);
}

}  // namespace arsafe::calib
