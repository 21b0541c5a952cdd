#include "arsafe/registration/align.hpp"

#include "arsafe/calib/horn.hpp"
#include "arsafe/geom/json.hpp"
#include "arsafe/geom/kdtree.hpp"
#include "arsafe/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace arsafe::registration {

using geom::Mat3;
using geom::KdTree;

namespace {

struct Match {
    std::uint32_t src;
    std::uint32_t dst;
};

double feature_dist2(const Feature& a, const Feature& b) {
    double s = 0.0;
    for (int i = 0; i < kFeatureBins; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Index of the closest valid feature in `pool`, or npos.
std::size_t nearest_feature(const Feature& f, const Descriptors& pool) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pool.size(); ++j) {
        if (!pool.valid[j]) continue;
        const double d = feature_dist2(f, pool.features[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

std::vector<Match> match_features(const Descriptors& src, const Descriptors& dst) {
    constexpr auto npos = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> fwd(src.size(), npos);
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src.valid[i]) fwd[i] = nearest_feature(src.features[i], dst);
    }
    std::vector<std::size_t> back(dst.size(), npos);
    std::vector<Match> mutual;
    std::vector<Match> forward;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const std::size_t j = fwd[i];
        if (j == npos) continue;
        forward.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
        if (back[j] == npos) back[j] = nearest_feature(dst.features[j], src);
        if (back[j] == i) mutual.push_back(forward.back());
    }
    return mutual.size() >= 3 ? mutual : forward;
}

std::vector<Vec3> transformed(const RigidTransform& t, const std::vector<Vec3>& pts) {
    std::vector<Vec3> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(t.apply(p));
    return out;
}

double radius_about_centroid(const std::vector<Vec3>& pts) {
    const Vec3 c = geom::centroid(pts);
    double r = 0.0;
    for (const auto& p : pts) r = std::max(r, (p - c).norm());
    return r;
}

// Inlier count and sum of squared inlier distances of transformed points against a tree.
struct Score {
    std::size_t inliers = 0;
    double sum_sq = 0.0;
    bool better_than(const Score& o) const {
        return inliers > o.inliers || (inliers == o.inliers && sum_sq < o.sum_sq);
    }
};

Score score_points(const std::vector<Vec3>& pts, const RigidTransform& t, const KdTree& tree, double gate) {
    Score s;
    const double gate2 = gate * gate;
    for (const auto& p : pts) {
        const auto nn = tree.nearest(t.apply(p));
        if (nn.dist2 <= gate2) {
            ++s.inliers;
            s.sum_sq += nn.dist2;
        }
    }
    return s;
}

RegistrationResult make_result(const RigidTransform& t, const Score& s, std::size_t n) {
    RegistrationResult r(t);
    r.fitness = n == 0 ? 0.0 : static_cast<double>(s.inliers) / static_cast<double>(n);
    r.rmse = s.inliers == 0 ? 0.0 : std::sqrt(s.sum_sq / static_cast<double>(s.inliers));
    return r;
}

void check_clouds(const PointCloud& src, const PointCloud& dst, std::size_t min_points) {
    if (src.size() < min_points || dst.size() < min_points) {
        throw InvalidArgument("registration needs at least " + std::to_string(min_points) + " points per cloud (got " +
                              std::to_string(src.size()) + " and " + std::to_string(dst.size()) + ")");
    }
}

}  // namespace

void RegistrationParams::validate() const {
    const auto& r = ransac;
    if (r.max_iterations == 0 || !(r.confidence > 0.0 && r.confidence < 1.0) || !(r.voxel > 0.0) ||
        r.normal_neighbors < 3 || !(r.descriptor_radius > 0.0) || !(r.max_corr_dist > 0.0) ||
        !(r.edge_length_ratio > 0.0 && r.edge_length_ratio < 1.0) || !(r.max_normal_angle > 0.0) ||
        r.min_inliers == 0 || r.candidates == 0) {
        throw InvalidArgument("invalid RANSAC registration parameters");
    }
    if (icp.max_iterations <= 0 || !(icp.corr_dist > 0.0) || !(icp.convergence_eps > 0.0) ||
        icp.max_point_count == 0) {
        throw InvalidArgument("invalid ICP parameters");
    }
    if (!(icp.convergence_eps < icp.corr_dist)) throw InvalidArgument("ICP convergence_eps must be below corr_dist");
    if (!(voxel > 0.0)) throw InvalidArgument("voxel size must be positive");
}

RegistrationResult evaluate_registration(const PointCloud& src, const PointCloud& dst, const RigidTransform& t,
                                         double max_dist) {
    check_clouds(src, dst, 1);
    const KdTree tree(dst.points);
    return make_result(t, score_points(src.points, t, tree, max_dist), src.size());
}

RegistrationResult ransac_global_register(const PointCloud& src, const Descriptors& src_features,
                                          const PointCloud& dst, const Descriptors& dst_features,
                                          const RansacParams& params) {
    check_clouds(src, dst, 3);
    if (src_features.size() != src.size() || dst_features.size() != dst.size()) {
        throw InvalidArgument("descriptor count does not match the cloud");
    }
    const auto matches = match_features(src_features, dst_features);
    if (matches.size() < 3) throw NoConsensus("fewer than 3 descriptor correspondences");
    const bool normals = src.has_normals() && dst.has_normals();
    const double cos_normal = std::cos(params.max_normal_angle);
    const double gate2 = params.max_corr_dist * params.max_corr_dist;

    auto count_matches = [&](const RigidTransform& t, std::vector<std::uint32_t>* which) {
        std::size_t n = 0;
        for (std::uint32_t m = 0; m < matches.size(); ++m) {
            if (geom::squared_distance(t.apply(src.points[matches[m].src]), dst.points[matches[m].dst]) < gate2) {
                ++n;
                if (which) which->push_back(m);
            }
        }
        return n;
    };

    struct Candidate {
        RigidTransform t;
        std::size_t count;
    };
    std::vector<Candidate> best;  // sorted by count, descending
    Rng rng = make_rng(params.seed);
    const double log_fail = std::log(1.0 - params.confidence);
    std::size_t needed = params.max_iterations;
    std::size_t it = 0;
    for (; it < params.max_iterations && it < needed; ++it) {
        std::array<std::uint32_t, 3> pick{};
        pick[0] = static_cast<std::uint32_t>(uniform_index(rng, matches.size()));
        do pick[1] = static_cast<std::uint32_t>(uniform_index(rng, matches.size()));
        while (pick[1] == pick[0]);
        do pick[2] = static_cast<std::uint32_t>(uniform_index(rng, matches.size()));
        while (pick[2] == pick[0] || pick[2] == pick[1]);

        bool ok = true;
        for (int a = 0; a < 3 && ok; ++a) {
            for (int b = a + 1; b < 3 && ok; ++b) {
                const double ls = (src.points[matches[pick[a]].src] - src.points[matches[pick[b]].src]).norm();
                const double ld = (dst.points[matches[pick[a]].dst] - dst.points[matches[pick[b]].dst]).norm();
                const double hi = std::max(ls, ld);
                ok = hi > 0.0 && std::min(ls, ld) >= params.edge_length_ratio * hi;
            }
        }
        if (!ok) continue;
        std::array<Vec3, 3> p, q;
        for (int k = 0; k < 3; ++k) {
            p[k] = src.points[matches[pick[k]].src];
            q[k] = dst.points[matches[pick[k]].dst];
        }
        std::optional<RigidTransform> t;
        try {
            t = calib::horn_align(p, q, src.frame, dst.frame);
        } catch (const DegenerateInput&) {
            continue;
        }
        if (normals) {
            for (int k = 0; k < 3 && ok; ++k) {
                ok = (t->rotation() * src.normals[matches[pick[k]].src]).dot(dst.normals[matches[pick[k]].dst]) >=
                     cos_normal;
            }
            if (!ok) continue;
        }
        const std::size_t count = count_matches(*t, nullptr);
        if (best.size() < params.candidates || count > best.back().count) {
            const auto pos = std::upper_bound(best.begin(), best.end(), count,
                                              [](std::size_t c, const Candidate& x) { return c > x.count; });
            best.insert(pos, Candidate{*t, count});
            if (best.size() > params.candidates) best.pop_back();
            const double w = static_cast<double>(best.front().count) / static_cast<double>(matches.size());
            const double miss = 1.0 - w * w * w;
            if (miss <= 0.0) {
                needed = it + 1;
            } else if (miss < 1.0) {
                needed = std::min(params.max_iterations, static_cast<std::size_t>(std::ceil(log_fail / std::log(miss))));
            }
        }
    }
    if (best.empty() || best.front().count < std::min<std::size_t>(params.min_inliers, matches.size())) {
        throw NoConsensus("no registration hypothesis reached " + std::to_string(params.min_inliers) +
                          " inlier correspondences after " + std::to_string(it) + " iterations");
    }

    const KdTree tree(dst.points);
    std::optional<RegistrationResult> winner;
    Score winner_score;
    for (const auto& c : best) {
        if (c.count < params.min_inliers && c.count < matches.size()) continue;
        std::vector<std::uint32_t> inl;
        count_matches(c.t, &inl);
        RigidTransform refined = c.t;
        if (inl.size() >= 3) {
            std::vector<Vec3> p, q;
            for (auto m : inl) {
                p.push_back(src.points[matches[m].src]);
                q.push_back(dst.points[matches[m].dst]);
            }
            try {
                const auto r = calib::horn_align(p, q, src.frame, dst.frame);
                if (count_matches(r, nullptr) >= inl.size()) refined = r;
            } catch (const DegenerateInput&) {
            }
        }
        const Score s = score_points(src.points, refined, tree, params.max_corr_dist);
        if (!winner || s.better_than(winner_score)) {
            winner = make_result(refined, s, src.size());
            winner_score = s;
        }
    }
    winner->iterations = static_cast<int>(it);
    return *winner;
}

RegistrationResult pca_align(const PointCloud& src, const PointCloud& dst, double max_corr_dist) {
    check_clouds(src, dst, 3);
    auto frame_of = [](const std::vector<Vec3>& pts, Vec3& c) {
        c = geom::centroid(pts);
        Mat3 cov = Mat3::Zero();
        for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
        const Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
        Mat3 axes = es.eigenvectors().rowwise().reverse();  // major axis first
        if (axes.determinant() < 0.0) axes.col(2) = -axes.col(2);
        return axes;
    };
    Vec3 cs, cd;
    const Mat3 as = frame_of(src.points, cs);
    const Mat3 ad = frame_of(dst.points, cd);
    const KdTree tree(dst.points);
    std::optional<RegistrationResult> best;
    Score best_score;
    for (int flip = 0; flip < 4; ++flip) {
        Eigen::Vector3d signs(flip & 1 ? -1.0 : 1.0, flip & 2 ? -1.0 : 1.0, 1.0);
        signs.z() = signs.x() * signs.y();
        const Mat3 r = ad * signs.asDiagonal() * as.transpose();
        const RigidTransform t(r, cd - r * cs, src.frame, dst.frame);
        const Score s = score_points(src.points, t, tree, max_corr_dist);
        if (!best || s.better_than(best_score)) {
            best = make_result(t, s, src.size());
            best_score = s;
        }
    }
    best->fallback = true;
    return *best;
}

RegistrationResult global_register(const PointCloud& src, const PointCloud& dst, const RansacParams& params) {
    auto prepare = [&](const PointCloud& c) {
        PointCloud down = voxel_downsample(c, params.voxel);
        if (!down.has_normals()) {
            const Vec3 view = geom::centroid(down.points) - Vec3(0, 0, 1);
            down = estimate_normals(down, std::min(params.normal_neighbors, down.size() - 1), view);
        }
        return down;
    };
    const PointCloud s = prepare(src);
    const PointCloud d = prepare(dst);
    try {
        return ransac_global_register(s, compute_descriptors(s, params.descriptor_radius), d,
                                      compute_descriptors(d, params.descriptor_radius), params);
    } catch (const NoConsensus&) {
        return pca_align(s, d, params.max_corr_dist);
    }
}

RegistrationResult icp_register(const PointCloud& src, const PointCloud& dst, const RigidTransform& init,
                                const IcpParams& params) {
    check_clouds(src, dst, 1);
    return icp_register(src, dst, KdTree(dst.points), init, params);
}

RegistrationResult icp_register(const PointCloud& src, const PointCloud& dst, const KdTree& tree,
                                const RigidTransform& init, const IcpParams& params) {
    check_clouds(src, dst, 1);
    if (tree.size() != dst.size()) throw InvalidArgument("ICP target index does not match the target cloud");
    if (init.from() != src.frame || init.to() != dst.frame) {
        throw FrameMismatch("ICP initial transform must map " + std::string(geom::to_string(src.frame)) + " to " +
                            std::string(geom::to_string(dst.frame)));
    }
    std::vector<Vec3> pts;
    if (src.size() > params.max_point_count) {
        const std::size_t stride = (src.size() + params.max_point_count - 1) / params.max_point_count;
        for (std::size_t i = 0; i < src.size(); i += stride) pts.push_back(src.points[i]);
    } else {
        pts = src.points;
    }
    const double gate2 = params.corr_dist * params.corr_dist;
    const double extent = radius_about_centroid(pts);

    struct Pairing {
        std::vector<Vec3> p, q;
        double truncated = 0.0;  // sum of min(d^2, gate^2)
        double inlier_sq = 0.0;
    };
    auto pair_up = [&](const std::vector<Vec3>& cur) {
        Pairing out;
        for (const auto& p : cur) {
            const auto nn = tree.nearest(p);
            if (nn.dist2 <= gate2) {
                out.p.push_back(p);
                out.q.push_back(dst.points[nn.index]);
                out.truncated += nn.dist2;
                out.inlier_sq += nn.dist2;
            } else {
                out.truncated += gate2;
            }
        }
        return out;
    };
    auto cost_of = [&](const Pairing& pr) { return std::sqrt(pr.truncated / static_cast<double>(pts.size())); };

    RigidTransform total = init;
    std::vector<Vec3> cur = transformed(init, pts);
    Pairing pairing = pair_up(cur);
    if (pairing.p.empty()) {
        throw NoConsensus("ICP: no source point within " + std::to_string(params.corr_dist) +
                          " m of the target at the initial pose");
    }
    RegistrationResult result(total);
    result.cost_history.push_back(cost_of(pairing));
    int it = 0;
    for (; it < params.max_iterations; ++it) {
        RigidTransform step(dst.frame, dst.frame);
        try {
            step = calib::horn_align(pairing.p, pairing.q, dst.frame, dst.frame);
        } catch (const DegenerateInput&) {
            break;
        }
        std::vector<Vec3> moved = transformed(step, cur);
        Pairing next = pair_up(moved);
        const double cost = cost_of(next);
        if (next.p.empty() || cost > result.cost_history.back()) break;
        total = geom::compose(total, step);
        cur = std::move(moved);
        pairing = std::move(next);
        result.cost_history.push_back(cost);
        const double change = step.translation().norm() + geom::rotation_angle(step.rotation()) * extent;
        if (change < params.convergence_eps) {
            ++it;
            break;
        }
    }
    result.transform = total;
    result.iterations = it;
    result.fitness = static_cast<double>(pairing.p.size()) / static_cast<double>(pts.size());
    result.rmse = std::sqrt(pairing.inlier_sq / static_cast<double>(pairing.p.size()));
    return result;
}

double registration_error(const PointCloud& pre_op, const PointCloud& recon, const RigidTransform& t) {
    if (pre_op.empty() || recon.empty()) throw InvalidArgument("registration error needs two nonempty clouds");
    if (t.from() != pre_op.frame || t.to() != recon.frame) {
        throw FrameMismatch("registration error: transform must map " + std::string(geom::to_string(pre_op.frame)) +
                            " to " + std::string(geom::to_string(recon.frame)));
    }
    const KdTree tree(recon.points);
    double sum = 0.0;
    for (const auto& p : pre_op.points) sum += tree.nearest(t.apply(p)).dist2;
    return std::sqrt(sum / static_cast<double>(pre_op.size()));
}

nlohmann::json to_json(const RegistrationResult& r) {
    return {{"transform", nlohmann::json(r.transform)},
            {"fitness", r.fitness},
            {"rmse_m", r.rmse},
            {"iterations", r.iterations},
            {"fallback", r.fallback}};
}

}  // namespace arsafe::registration
