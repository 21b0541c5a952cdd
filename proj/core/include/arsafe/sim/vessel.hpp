#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/cloud.hpp"

#include <vector>

namespace arsafe::sim {

using geom::FrameId;
using geom::TriangleMesh;
using geom::Vec3;

/// Tube around a Catmull-Rom centreline. Branches are separate closed tubes.
struct VesselSpec {
    std::vector<Vec3> control_points;  // m
    double radius = 0.005;             // m
    int radial_segments = 24;
    int axial_segments = 64;
    std::vector<VesselSpec> branches;

    void validate() const;
};

/// Uniform Catmull-Rom point at parameter s in [0, n-1]; end segments
/// use mirrored phantom points.
Vec3 centerline_point(const std::vector<Vec3>& control, double s);
Vec3 centerline_tangent(const std::vector<Vec3>& control, double s);

/// Closed tube: 2 * radial * axial side triangles plus a radial-triangle fan per end cap,
/// outward winding. Throws DegenerateInput when neighbouring rings overlap (too tight a bend).
TriangleMesh build_vessel_mesh(const VesselSpec& spec, FrameId frame = FrameId::ECM);

}  // namespace arsafe::sim
