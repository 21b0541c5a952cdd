#pragma once

#include "arsafe/geom/frames.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace arsafe::geom {

/// Source pixel of a reconstructed point (column u, row v).
struct PixelIndex {
    std::int32_t u = 0;
    std::int32_t v = 0;
    bool operator==(const PixelIndex&) const = default;
};

/// Points expressed in one frame. `normals` and `pixels` are either empty or parallel to `points`.
struct PointCloud {
    FrameId frame = FrameId::ECM;
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<PixelIndex> pixels;

    PointCloud() = default;
    explicit PointCloud(FrameId f) : frame(f) {}
    PointCloud(FrameId f, std::vector<Vec3> pts) : frame(f), points(std::move(pts)) {}

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
    bool has_pixels() const { return !pixels.empty() && pixels.size() == points.size(); }
};

using Triangle = std::array<std::uint32_t, 3>;

/// Indexed triangle mesh; counter-clockwise winding seen from outside gives outward normals.
struct TriangleMesh {
    FrameId frame = FrameId::BL;
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;

    Vec3 face_normal(std::size_t tri) const;
    double face_area(std::size_t tri) const;
    double total_area() const;
};

/// Applies `t` to every point (and rotates normals). The cloud must be labeled t.from().
PointCloud transform_points(const RigidTransform& t, const PointCloud& cloud);
TriangleMesh transform_mesh(const RigidTransform& t, const TriangleMesh& mesh);

/// Axis-aligned bounds; both are zero for an empty cloud.
std::pair<Vec3, Vec3> bounding_box(const std::vector<Vec3>& pts);
Vec3 centroid(const std::vector<Vec3>& pts);

/// Appends `other` (same frame) to `into`, keeping optional channels consistent.
void append(PointCloud& into, const PointCloud& other);

}  // namespace arsafe::geom
