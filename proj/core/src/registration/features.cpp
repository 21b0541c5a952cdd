#include "arsafe/registration/features.hpp"

#include "arsafe/geom/kdtree.hpp"
#include "arsafe/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace arsafe::registration {

namespace {

constexpr int kSubBins = kFeatureBins / 3;

// Linear split of a value between its two nearest bin centres, so histograms vary
// continuously with the input angles.
void soft_bin(double x, double lo, double hi, double weight, double* bins) {
    const double t = std::clamp((x - lo) / (hi - lo), 0.0, 1.0) * kSubBins - 0.5;
    const double f = std::floor(t);
    const double frac = t - f;
    const int b0 = static_cast<int>(f);
    if (b0 >= 0) bins[b0] += weight * (1.0 - frac);
    if (b0 + 1 < kSubBins) bins[b0 + 1] += weight * frac;
    if (b0 < 0) bins[0] += weight * (1.0 - frac);
    if (b0 + 1 >= kSubBins) bins[kSubBins - 1] += weight * frac;
}

bool pair_features(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2, double& theta, double& alpha,
                   double& phi) {
    Vec3 dp = p2 - p1;
    const double d = dp.norm();
    if (!(d > 0.0)) return false;
    const Vec3* ns = &n1;
    const Vec3* nt = &n2;
    const double a1 = std::abs(n1.dot(dp)) / d;
    const double a2 = std::abs(n2.dot(dp)) / d;
    if (a1 < a2) {
        std::swap(ns, nt);
        dp = -dp;
    }
    const Vec3& u = *ns;
    Vec3 v = dp.cross(u);
    const double vn = v.norm();
    if (!(vn > 1e-12 * d)) return false;
    v /= vn;
    const Vec3 w = u.cross(v);
    theta = std::atan2(w.dot(*nt), u.dot(*nt));
    alpha = v.dot(*nt);
    phi = u.dot(dp) / d;
    return true;
}

void normalise(Feature& f) {
    for (int s = 0; s < 3; ++s) {
        double sum = 0.0;
        for (int b = 0; b < kSubBins; ++b) sum += f[s * kSubBins + b];
        if (sum > 0.0) {
            for (int b = 0; b < kSubBins; ++b) f[s * kSubBins + b] *= 100.0 / sum;
        }
    }
}

}  // namespace

PointCloud sample_mesh_points(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
    std::vector<double> cumulative;
    cumulative.reserve(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (auto idx : mesh.triangles[t]) {
            if (idx >= mesh.vertices.size()) throw InvalidArgument("triangle index out of range");
        }
        total += mesh.face_area(t);
        cumulative.push_back(total);
    }
    if (!(total > 0.0)) throw DegenerateInput("mesh has no surface area to sample");
    PointCloud cloud(mesh.frame);
    cloud.points.reserve(n);
    cloud.normals.reserve(n);
    Rng rng = make_rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = uniform01(rng) * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        if (it == cumulative.end()) --it;
        const auto t = static_cast<std::size_t>(it - cumulative.begin());
        double a = uniform01(rng);
        double b = uniform01(rng);
        if (a + b > 1.0) {
            a = 1.0 - a;
            b = 1.0 - b;
        }
        const auto& tri = mesh.triangles[t];
        const Vec3& v0 = mesh.vertices[tri[0]];
        const Vec3& v1 = mesh.vertices[tri[1]];
        const Vec3& v2 = mesh.vertices[tri[2]];
        cloud.points.push_back(v0 + a * (v1 - v0) + b * (v2 - v0));
        cloud.normals.push_back(mesh.face_normal(t));
    }
    return cloud;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
    if (!(voxel > 0.0)) throw InvalidArgument("voxel size must be positive");
    struct Key {
        std::int64_t x, y, z;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            return static_cast<std::size_t>(mix_seed(static_cast<std::uint64_t>(k.x),
                                                     mix_seed(static_cast<std::uint64_t>(k.y),
                                                              static_cast<std::uint64_t>(k.z))));
        }
    };
    std::unordered_map<Key, std::size_t, KeyHash> slot;
    std::vector<Vec3> sum_p;
    std::vector<Vec3> sum_n;
    std::vector<std::size_t> count;
    const bool normals = cloud.has_normals();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        const Key k{static_cast<std::int64_t>(std::floor(p.x() / voxel)), static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                    static_cast<std::int64_t>(std::floor(p.z() / voxel))};
        auto [it, fresh] = slot.try_emplace(k, sum_p.size());
        if (fresh) {
            sum_p.push_back(Vec3::Zero());
            sum_n.push_back(Vec3::Zero());
            count.push_back(0);
        }
        sum_p[it->second] += p;
        if (normals) sum_n[it->second] += cloud.normals[i];
        ++count[it->second];
    }
    PointCloud out(cloud.frame);
    out.points.reserve(sum_p.size());
    for (std::size_t s = 0; s < sum_p.size(); ++s) {
        out.points.push_back(sum_p[s] / static_cast<double>(count[s]));
        if (normals) {
            const double len = sum_n[s].norm();
            out.normals.push_back(len > 0.0 ? Vec3(sum_n[s] / len) : Vec3::UnitZ());
        }
    }
    return out;
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, const Vec3& viewpoint) {
    if (k < 3) throw InvalidArgument("normal estimation needs k >= 3");
    if (cloud.size() <= k) {
        throw InvalidArgument("normal estimation needs more than k=" + std::to_string(k) + " points, got " +
                              std::to_string(cloud.size()));
    }
    const geom::KdTree tree(cloud.points);
    PointCloud out = cloud;
    out.normals.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nn = tree.knn(cloud.points[i], k);
        Vec3 mean = Vec3::Zero();
        for (const auto& n : nn) mean += cloud.points[n.index];
        mean /= static_cast<double>(nn.size());
        geom::Mat3 cov = geom::Mat3::Zero();
        for (const auto& n : nn) {
            const Vec3 d = cloud.points[n.index] - mean;
            cov += d * d.transpose();
        }
        const Eigen::SelfAdjointEigenSolver<geom::Mat3> es(cov);
        Vec3 normal = es.eigenvectors().col(0);
        if (normal.dot(viewpoint - cloud.points[i]) < 0.0) normal = -normal;
        out.normals[i] = normal;
    }
    return out;
}

Descriptors compute_descriptors(const PointCloud& cloud, double radius) {
    if (!(radius > 0.0)) throw InvalidArgument("descriptor radius must be positive");
    if (!cloud.has_normals()) throw InvalidArgument("descriptors need normals");
    const std::size_t n = cloud.size();
    const geom::KdTree tree(cloud.points);
    std::vector<std::vector<geom::Neighbor>> neighbours(n);
    std::vector<Feature> spfh(n);
    for (std::size_t i = 0; i < n; ++i) {
        spfh[i].fill(0.0);
        auto nn = tree.radius(cloud.points[i], radius);
        std::erase_if(nn, [&](const geom::Neighbor& c) { return c.index == i || c.dist2 == 0.0; });
        neighbours[i] = std::move(nn);
        for (const auto& c : neighbours[i]) {
            double theta = 0, alpha = 0, phi = 0;
            if (!pair_features(cloud.points[i], cloud.normals[i], cloud.points[c.index], cloud.normals[c.index], theta,
                               alpha, phi)) {
                continue;
            }
            soft_bin(theta, -std::numbers::pi, std::numbers::pi, 1.0, spfh[i].data());
            soft_bin(alpha, -1.0, 1.0, 1.0, spfh[i].data() + kSubBins);
            soft_bin(phi, -1.0, 1.0, 1.0, spfh[i].data() + 2 * kSubBins);
        }
        normalise(spfh[i]);
    }
    Descriptors out;
    out.features.resize(n);
    out.valid.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        Feature f = spfh[i];
        if (neighbours[i].empty()) {
            out.features[i].fill(0.0);
            continue;
        }
        const double inv_k = 1.0 / static_cast<double>(neighbours[i].size());
        for (const auto& c : neighbours[i]) {
            const double w = inv_k / std::sqrt(c.dist2);
            for (int b = 0; b < kFeatureBins; ++b) f[b] += w * spfh[c.index][b];
        }
        normalise(f);
        out.features[i] = f;
        out.valid[i] = true;
    }
    return out;
}

}  // namespace arsafe::registration
