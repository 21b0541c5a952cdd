#include "arsafe/geom/frames.hpp"

#include "arsafe/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <string>

namespace arsafe::geom {

namespace {

constexpr std::array<std::pair<FrameId, std::string_view>, 9> kFrameNames{{
    {FrameId::EE1, "EE1"},
    {FrameId::EE2, "EE2"},
    {FrameId::ECM, "ECM"},
    {FrameId::L_CAM, "L_CAM"},
    {FrameId::R_CAM, "R_CAM"},
    {FrameId::Rec_L_CAM, "Rec_L_CAM"},
    {FrameId::Rec_R_CAM, "Rec_R_CAM"},
    {FrameId::BL, "BL"},
    {FrameId::Board, "Board"},
}};

constexpr double kOrthoTol = 1e-9;

}  // namespace

std::string_view to_string(FrameId id) {
    for (const auto& [frame, name] : kFrameNames) {
        if (frame == id) return name;
    }
    return "?";
}

FrameId frame_from_string(std::string_view name) {
    for (const auto& [frame, n] : kFrameNames) {
        if (n == name) return frame;
    }
    throw InvalidArgument("unknown frame name '" + std::string(name) + "'");
}

RigidTransform::RigidTransform(FrameId from, FrameId to) : from_(from), to_(to) {}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation, FrameId from, FrameId to)
    : rotation_(rotation), translation_(translation), from_(from), to_(to) {
    if (!rotation.allFinite() || !translation.allFinite()) {
        throw InvalidArgument("rigid transform has non-finite entries");
    }
    const double ortho = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    const double det = rotation.determinant();
    if (ortho > kOrthoTol || std::abs(det - 1.0) > kOrthoTol) {
        throw InvalidArgument("rotation is not orthonormal with det +1 (|RR^T-I|=" + std::to_string(ortho) +
                              ", det=" + std::to_string(det) + ")");
    }
}

Mat4 RigidTransform::matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform inv(to_, from_);
    inv.rotation_ = rotation_.transpose();
    inv.translation_ = -(inv.rotation_ * translation_);
    return inv;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    if (a.to() != b.from()) {
        throw FrameMismatch("cannot compose " + std::string(to_string(a.from())) + "->" + std::string(to_string(a.to())) +
                            " with " + std::string(to_string(b.from())) + "->" + std::string(to_string(b.to())));
    }
    return RigidTransform(b.rotation() * a.rotation(), b.rotation() * a.translation() + b.translation(), a.from(),
                          b.to());
}

RigidTransform invert(const RigidTransform& t) { return t.inverse(); }

double rotation_angle(const Mat3& r) {
    const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
    // acos loses precision near 0; use the skew part there.
    const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    return std::atan2(0.5 * w.norm(), c);
}

Mat3 rotation_from_vector(const Vec3& rotvec) {
    const double angle = rotvec.norm();
    if (angle < 1e-300) return Mat3::Identity();
    return Eigen::AngleAxisd(angle, rotvec / angle).toRotationMatrix();
}

Mat3 orthonormalize(const Mat3& r) {
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
    return svd.matrixU() * d * svd.matrixV().transpose();
}

void FrameGraph::set(const RigidTransform& t) {
    edges_.erase({t.to(), t.from()});
    edges_.insert_or_assign({t.from(), t.to()}, t);
}

bool FrameGraph::has(FrameId from, FrameId to) const {
    return edges_.count({from, to}) > 0 || edges_.count({to, from}) > 0;
}

RigidTransform FrameGraph::get(FrameId from, FrameId to) const {
    if (auto it = edges_.find({from, to}); it != edges_.end()) return it->second;
    if (auto it = edges_.find({to, from}); it != edges_.end()) return it->second.inverse();
    throw MissingTransform("frame graph has no transform " + std::string(to_string(from)) + "->" +
                           std::string(to_string(to)));
}

RigidTransform FrameGraph::resolve(FrameId from, FrameId to) const {
    if (from == to) return RigidTransform::identity(from);
    std::map<FrameId, RigidTransform> reached;
    reached.emplace(from, RigidTransform::identity(from));
    std::deque<FrameId> queue{from};
    while (!queue.empty()) {
        const FrameId cur = queue.front();
        queue.pop_front();
        for (const auto& [key, edge] : edges_) {
            for (const RigidTransform& step : {edge, edge.inverse()}) {
                if (step.from() != cur || reached.count(step.to())) continue;
                RigidTransform chained = compose(reached.at(cur), step);
                if (step.to() == to) return chained;
                reached.emplace(step.to(), chained);
                queue.push_back(step.to());
            }
        }
    }
    throw MissingTransform("frame graph has no chain " + std::string(to_string(from)) + "->" +
                           std::string(to_string(to)));
}

std::vector<RigidTransform> FrameGraph::edges() const {
    std::vector<RigidTransform> out;
    out.reserve(edges_.size());
    for (const auto& [key, t] : edges_) out.push_back(t);
    return out;
}

}  // namespace arsafe::geom
