#include "arsafe/calib/horn.hpp"

#include "arsafe/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace arsafe::calib {

using geom::Mat3;

namespace {

constexpr double kCollinearEigen = 1e-12;  // m^2

double middle_eigenvalue(std::span<const Vec3> pts, std::span<const double> w, const Vec3& c, double wsum) {
    Mat3 cov = Mat3::Zero();
    for (std::size_t i = 0; i < pts.size(); ++i) cov += w[i] * (pts[i] - c) * (pts[i] - c).transpose();
    cov /= wsum;
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[1];
}

}  // namespace

RigidTransform horn_align_weighted(std::span<const Vec3> p, std::span<const Vec3> q, std::span<const double> w,
                                   FrameId from, FrameId to) {
    if (p.size() != q.size() || p.size() != w.size()) throw InvalidArgument("horn_align: input sizes differ");
    if (p.size() < 3) throw InvalidArgument("horn_align needs at least 3 point pairs, got " + std::to_string(p.size()));
    double wsum = 0.0;
    for (double wi : w) {
        if (!(wi >= 0.0)) throw InvalidArgument("horn_align: weights must be non-negative");
        wsum += wi;
    }
    if (!(wsum > 0.0)) throw InvalidArgument("horn_align: weights sum to zero");

    Vec3 cp = Vec3::Zero();
    Vec3 cq = Vec3::Zero();
    for (std::size_t i = 0; i < p.size(); ++i) {
        cp += w[i] * p[i];
        cq += w[i] * q[i];
    }
    cp /= wsum;
    cq /= wsum;
    if (middle_eigenvalue(p, w, cp, wsum) < kCollinearEigen || middle_eigenvalue(q, w, cq, wsum) < kCollinearEigen) {
        throw DegenerateInput("horn_align: points are collinear or coincident");
    }

    Mat3 s = Mat3::Zero();
    for (std::size_t i = 0; i < p.size(); ++i) s += w[i] * (p[i] - cp) * (q[i] - cq).transpose();

    const double sxx = s(0, 0), sxy = s(0, 1), sxz = s(0, 2);
    const double syx = s(1, 0), syy = s(1, 1), syz = s(1, 2);
    const double szx = s(2, 0), szy = s(2, 1), szz = s(2, 2);
    Eigen::Matrix4d n;
    n << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
         syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
         szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
         sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(n);
    const Eigen::Vector4d v = es.eigenvectors().col(3);
    const Eigen::Quaterniond quat(v[0], v[1], v[2], v[3]);
    const Mat3 r = geom::orthonormalize(quat.normalized().toRotationMatrix());
    return RigidTransform(r, cq - r * cp, from, to);
}

RigidTransform horn_align(std::span<const Vec3> p, std::span<const Vec3> q, FrameId from, FrameId to) {
    const std::vector<double> w(p.size(), 1.0);
    return horn_align_weighted(p, q, w, from, to);
}

void PointPairSet::validate() const {
    if (left.size() != right.size()) throw InvalidArgument("hand-hand point sets differ in size");
    if (left.empty()) throw InvalidArgument("hand-hand point set is empty");
}

RigidTransform hand_hand_calibrate(const PointPairSet& pairs) {
    pairs.validate();
    return horn_align(pairs.right, pairs.left, FrameId::EE1, FrameId::EE2);
}

double rms_point_error(std::span<const Vec3> p, std::span<const Vec3> q, const RigidTransform& t) {
    if (p.size() != q.size()) throw InvalidArgument("rms_point_error: sizes differ");
    if (p.empty()) throw InvalidArgument("rms_point_error: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += (q[i] - t.apply(p[i])).squaredNorm();
    return std::sqrt(acc / static_cast<double>(p.size()));
}

double hand_hand_error(const PointPairSet& pairs, const RigidTransform& t) {
    pairs.validate();
    if (t.from() != FrameId::EE1 || t.to() != FrameId::EE2) {
        throw FrameMismatch("hand-hand transform must map EE1 to EE2");
    }
    return rms_point_error(pairs.right, pairs.left, t);
}

}  // namespace arsafe::calib
