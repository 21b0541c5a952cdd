#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/cloud.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace arsafe::registration {

using geom::FrameId;
using geom::PointCloud;
using geom::TriangleMesh;
using geom::Vec3;

/// n points placed uniformly on the surface (triangles picked by area), each carrying the
/// face normal. Throws DegenerateInput when the mesh has no area.
PointCloud sample_mesh_points(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

/// One point per occupied voxel (centroid of its members), in first-occurrence order.
/// Normals are averaged and renormalised; pixel provenance is dropped.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel);

/// PCA normals over the k nearest neighbours (the point itself included), flipped to face
/// `viewpoint`. Needs 3 <= k < cloud size.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, const Vec3& viewpoint = Vec3::Zero());

inline constexpr int kFeatureBins = 33;
using Feature = std::array<double, kFeatureBins>;

/// FPFH-style histograms: three 11-bin angle histograms (theta, alpha, phi), each summing to
/// 100 for points with neighbours. Points without neighbours in `radius` keep a zero
/// histogram and valid = false.
struct Descriptors {
    std::vector<Feature> features;
    std::vector<bool> valid;
    std::size_t size() const { return features.size(); }
};

Descriptors compute_descriptors(const PointCloud& cloud, double radius);

}  // namespace arsafe::registration
