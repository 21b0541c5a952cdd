#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/frames.hpp"

#include <cstdint>
#include <vector>

namespace arsafe::geom {

struct Neighbor {
    std::uint32_t index = 0;
    double dist2 = 0.0;  // squared Euclidean distance
    bool operator==(const Neighbor&) const = default;
};

/// Balanced 3-D kd-tree over a copy of the points (median splits on the widest axis).
/// Queries are exact; ties are broken towards the smaller point index so results match a
/// linear scan in index order.
class KdTree {
public:
    static constexpr int kLeafSize = 16;

    KdTree() = default;
    explicit KdTree(std::vector<Vec3> points);

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const std::vector<Vec3>& points() const { return points_; }

    /// Throws InvalidArgument on an empty tree.
    Neighbor nearest(const Vec3& q) const;
    /// Up to k neighbours ordered by (dist2, index).
    std::vector<Neighbor> knn(const Vec3& q, std::size_t k) const;
    /// All points with dist2 <= r^2, ordered by index.
    std::vector<Neighbor> radius(const Vec3& q, double r) const;

private:
    struct Node {
        std::uint32_t begin = 0, end = 0;  // range in order_ (leaves)
        std::int32_t left = -1, right = -1;
        int axis = -1;  // -1 for leaves
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void nearest_rec(std::int32_t node, const Vec3& q, Neighbor& best) const;

    template <typename Visit>
    void visit_ball(std::int32_t node, const Vec3& q, double& bound2, Visit&& visit) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

/// Squared distance with the same floating-point evaluation order the tree uses.
inline double squared_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

}  // namespace arsafe::geom
