#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/cloud.hpp"
#include "arsafe/geom/kdtree.hpp"
#include "arsafe/registration/features.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace arsafe::registration {

using geom::RigidTransform;

struct RansacParams {
    std::size_t max_iterations = 100000;
    double confidence = 0.999;     // early exit
    double voxel = 0.002;          // m, downsampling before descriptors
    std::size_t normal_neighbors = 16;
    double descriptor_radius = 0.01;  // m
    double max_corr_dist = 0.003;     // m
    double edge_length_ratio = 0.9;
    double max_normal_angle = 0.5236;  // rad
    std::size_t min_inliers = 10;
    std::size_t candidates = 20;  // hypotheses re-scored on the full cloud
    std::uint64_t seed = 0;
};

struct IcpParams {
    int max_iterations = 50;
    double corr_dist = 0.005;          // m
    double convergence_eps = 1e-6;     // m, bound on the largest point displacement of an update
    std::size_t max_point_count = 5000;
};

struct RegistrationParams {
    RansacParams ransac;
    IcpParams icp;
    double voxel = 0.001;  // m, per-frame downsampling before ICP

    void validate() const;
};

/// `transform` maps the source cloud's frame onto the target's.
struct RegistrationResult {
    RigidTransform transform;
    double fitness = 0.0;  // fraction of source points with a target neighbour within the gate
    double rmse = 0.0;     // m, over those points
    int iterations = 0;
    /// ICP: sqrt(mean(min(d^2, gate^2))) before the first and after every accepted update.
    std::vector<double> cost_history;
    bool fallback = false;  // global stage used the PCA alignment

    explicit RegistrationResult(RigidTransform t) : transform(std::move(t)) {}
};

/// Mutual nearest descriptor matches, 3-point RANSAC with edge-length and normal pruning,
/// Horn refinement on the inliers of the best candidates. Clouds need normals for the
/// normal test (skipped otherwise). Throws NoConsensus when no hypothesis reaches min_inliers.
RegistrationResult ransac_global_register(const PointCloud& src, const Descriptors& src_features,
                                          const PointCloud& dst, const Descriptors& dst_features,
                                          const RansacParams& params);

/// Centroid and principal-axis alignment; the best of the four proper axis sign choices.
RegistrationResult pca_align(const PointCloud& src, const PointCloud& dst, double max_corr_dist);

/// Downsample, normals (kept when present), descriptors, RANSAC; falls back to pca_align
/// when RANSAC finds no consensus.
RegistrationResult global_register(const PointCloud& src, const PointCloud& dst, const RansacParams& params);

/// Point-to-point ICP from `init` (src frame -> dst frame). Throws NoConsensus when no
/// source point has a target within corr_dist at the start.
RegistrationResult icp_register(const PointCloud& src, const PointCloud& dst, const RigidTransform& init,
                                const IcpParams& params);
/// Same, reusing a prebuilt index over dst.points.
RegistrationResult icp_register(const PointCloud& src, const PointCloud& dst, const geom::KdTree& dst_tree,
                                const RigidTransform& init, const IcpParams& params);

/// Inlier fraction and RMSE of `t` applied to src against dst, gate `max_dist`.
RegistrationResult evaluate_registration(const PointCloud& src, const PointCloud& dst, const RigidTransform& t,
                                         double max_dist);

/// E_regis: RMS over transformed pre-operative points of the distance to the nearest
/// reconstructed point. `t` maps BL to ECM; `recon` is in ECM.
double registration_error(const PointCloud& pre_op, const PointCloud& recon, const RigidTransform& t);

nlohmann::json to_json(const RegistrationResult& r);

}  // namespace arsafe::registration
