#include "arsafe/sim/vessel.hpp"

#include <cmath>
#include <string>

namespace arsafe::sim {

namespace {

struct Segment {
    Vec3 p0, p1, p2, p3;
    double t;
};

Segment locate(const std::vector<Vec3>& c, double s) {
    const int n = static_cast<int>(c.size());
    const double clamped = std::clamp(s, 0.0, static_cast<double>(n - 1));
    int i = std::min(static_cast<int>(std::floor(clamped)), n - 2);
    const double t = clamped - i;
    const Vec3 before = i > 0 ? c[i - 1] : Vec3(2.0 * c[0] - c[1]);
    const Vec3 after = i + 2 < n ? c[i + 2] : Vec3(2.0 * c[n - 1] - c[n - 2]);
    return {before, c[i], c[i + 1], after, t};
}

void append_tube(const VesselSpec& spec, TriangleMesh& mesh) {
    const auto& c = spec.control_points;
    const int rings = spec.axial_segments + 1;
    const int rs = spec.radial_segments;
    const double span = static_cast<double>(c.size() - 1);
    std::vector<Vec3> centers(rings), tangents(rings), normals(rings);
    for (int i = 0; i < rings; ++i) {
        const double s = span * i / spec.axial_segments;
        centers[i] = centerline_point(c, s);
        tangents[i] = centerline_tangent(c, s);
    }
    // Parallel-transported normal: start from the axis least aligned with the first tangent.
    Vec3 seed = Vec3::UnitX();
    if (std::abs(tangents[0].y()) < std::abs(tangents[0][0]) && std::abs(tangents[0].y()) <= std::abs(tangents[0].z())) {
        seed = Vec3::UnitY();
    } else if (std::abs(tangents[0].z()) < std::abs(tangents[0][0])) {
        seed = Vec3::UnitZ();
    }
    normals[0] = (seed - seed.dot(tangents[0]) * tangents[0]).normalized();
    for (int i = 1; i < rings; ++i) {
        const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(tangents[i - 1], tangents[i]);
        Vec3 n = q * normals[i - 1];
        normals[i] = (n - n.dot(tangents[i]) * tangents[i]).normalized();
    }

    const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
    for (int i = 0; i < rings; ++i) {
        const Vec3 b = tangents[i].cross(normals[i]);
        for (int k = 0; k < rs; ++k) {
            const double a = 2.0 * M_PI * k / rs;
            mesh.vertices.push_back(centers[i] + spec.radius * (std::cos(a) * normals[i] + std::sin(a) * b));
        }
    }
    for (int i = 0; i + 1 < rings; ++i) {
        for (int k = 0; k < rs; ++k) {
            if ((mesh.vertices[base + i * rs + k] - centers[i + 1]).dot(tangents[i + 1]) >= 0.0 ||
                (mesh.vertices[base + (i + 1) * rs + k] - centers[i]).dot(tangents[i]) <= 0.0) {
                throw DegenerateInput("vessel centreline bends too tightly: rings " + std::to_string(i) + " and " +
                                      std::to_string(i + 1) + " overlap");
            }
        }
    }
    auto vid = [&](int ring, int k) { return base + static_cast<std::uint32_t>(ring * rs + (k % rs)); };
    for (int i = 0; i + 1 < rings; ++i) {
        for (int k = 0; k < rs; ++k) {
            mesh.triangles.push_back({vid(i, k), vid(i, k + 1), vid(i + 1, k)});
            mesh.triangles.push_back({vid(i, k + 1), vid(i + 1, k + 1), vid(i + 1, k)});
        }
    }
    const auto start = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(centers.front());
    const auto end = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(centers.back());
    for (int k = 0; k < rs; ++k) {
        mesh.triangles.push_back({start, vid(0, k + 1), vid(0, k)});
        mesh.triangles.push_back({end, vid(rings - 1, k), vid(rings - 1, k + 1)});
    }
    for (const auto& b : spec.branches) append_tube(b, mesh);
}

}  // namespace

void VesselSpec::validate() const {
    if (control_points.size() < 2) throw InvalidArgument("vessel needs at least 2 control points");
    if (!(radius > 0.0)) throw InvalidArgument("vessel radius must be positive");
    if (radial_segments < 3 || axial_segments < 1) throw InvalidArgument("vessel needs >= 3 radial and >= 1 axial segments");
    for (std::size_t i = 1; i < control_points.size(); ++i) {
        if (!((control_points[i] - control_points[i - 1]).norm() > 0.0)) {
            throw InvalidArgument("vessel control points must be distinct");
        }
    }
    for (const auto& b : branches) b.validate();
}

Vec3 centerline_point(const std::vector<Vec3>& control, double s) {
    const Segment g = locate(control, s);
    const double t = g.t, t2 = t * t, t3 = t2 * t;
    return 0.5 * ((2.0 * g.p1) + (-g.p0 + g.p2) * t + (2.0 * g.p0 - 5.0 * g.p1 + 4.0 * g.p2 - g.p3) * t2 +
                  (-g.p0 + 3.0 * g.p1 - 3.0 * g.p2 + g.p3) * t3);
}

Vec3 centerline_tangent(const std::vector<Vec3>& control, double s) {
    const Segment g = locate(control, s);
    const double t = g.t, t2 = t * t;
    const Vec3 d = 0.5 * ((-g.p0 + g.p2) + 2.0 * (2.0 * g.p0 - 5.0 * g.p1 + 4.0 * g.p2 - g.p3) * t +
                          3.0 * (-g.p0 + 3.0 * g.p1 - 3.0 * g.p2 + g.p3) * t2);
    const double len = d.norm();
    if (!(len > 0.0)) throw DegenerateInput("vessel centreline has a zero-length tangent");
    return d / len;
}

TriangleMesh build_vessel_mesh(const VesselSpec& spec, FrameId frame) {
    spec.validate();
    TriangleMesh mesh;
    mesh.frame = frame;
    append_tube(spec, mesh);
    return mesh;
}

}  // namespace arsafe::sim
