#include "arsafe/geom/cloud.hpp"

#include "arsafe/error.hpp"

#include <string>

namespace arsafe::geom {

Vec3 TriangleMesh::face_normal(std::size_t tri) const {
    const auto& t = triangles.at(tri);
    const Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
    const double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriangleMesh::face_area(std::size_t tri) const {
    const auto& t = triangles.at(tri);
    return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

double TriangleMesh::total_area() const {
    double area = 0.0;
    for (std::size_t i = 0; i < triangles.size(); ++i) area += face_area(i);
    return area;
}

PointCloud transform_points(const RigidTransform& t, const PointCloud& cloud) {
    if (cloud.frame != t.from()) {
        throw FrameMismatch("cloud is in " + std::string(to_string(cloud.frame)) + " but transform maps from " +
                            std::string(to_string(t.from())));
    }
    PointCloud out(t.to());
    out.points.reserve(cloud.points.size());
    for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
    out.normals.reserve(cloud.normals.size());
    for (const auto& n : cloud.normals) out.normals.push_back(t.rotate(n));
    out.pixels = cloud.pixels;
    return out;
}

TriangleMesh transform_mesh(const RigidTransform& t, const TriangleMesh& mesh) {
    if (mesh.frame != t.from()) {
        throw FrameMismatch("mesh is in " + std::string(to_string(mesh.frame)) + " but transform maps from " +
                            std::string(to_string(t.from())));
    }
    TriangleMesh out;
    out.frame = t.to();
    out.triangles = mesh.triangles;
    out.vertices.reserve(mesh.vertices.size());
    for (const auto& v : mesh.vertices) out.vertices.push_back(t.apply(v));
    return out;
}

std::pair<Vec3, Vec3> bounding_box(const std::vector<Vec3>& pts) {
    if (pts.empty()) return {Vec3::Zero(), Vec3::Zero()};
    Vec3 lo = pts.front();
    Vec3 hi = pts.front();
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return {lo, hi};
}

Vec3 centroid(const std::vector<Vec3>& pts) {
    Vec3 c = Vec3::Zero();
    if (pts.empty()) return c;
    for (const auto& p : pts) c += p;
    return c / static_cast<double>(pts.size());
}

void append(PointCloud& into, const PointCloud& other) {
    if (into.frame != other.frame && !into.empty()) {
        throw FrameMismatch("cannot append clouds in different frames");
    }
    if (into.empty()) into.frame = other.frame;
    const bool keep_normals = (into.empty() || into.has_normals()) && other.has_normals();
    const bool keep_pixels = (into.empty() || into.has_pixels()) && other.has_pixels();
    into.points.insert(into.points.end(), other.points.begin(), other.points.end());
    if (keep_normals) {
        into.normals.insert(into.normals.end(), other.normals.begin(), other.normals.end());
    } else {
        into.normals.clear();
    }
    if (keep_pixels) {
        into.pixels.insert(into.pixels.end(), other.pixels.begin(), other.pixels.end());
    } else {
        into.pixels.clear();
    }
}

}  // namespace arsafe::geom
