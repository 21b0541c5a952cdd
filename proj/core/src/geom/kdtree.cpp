#include "arsafe/geom/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

namespace arsafe::geom {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("too many points for kd-tree");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points_.empty()) {
        nodes_.reserve(2 * (points_.size() / kLeafSize + 1));
        build(0, static_cast<std::uint32_t>(points_.size()));
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end, -1, -1, -1, 0.0});
    if (end - begin <= static_cast<std::uint32_t>(kLeafSize)) return id;
    Vec3 lo = points_[order_[begin]];
    Vec3 hi = lo;
    for (std::uint32_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all duplicates: keep as one leaf
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const std::int32_t l = build(begin, mid);
    const std::int32_t r = build(mid, end);
    Node& n = nodes_[static_cast<std::size_t>(id)];
    n.axis = axis;
    n.split = split;
    n.left = l;
    n.right = r;
    return id;
}

void KdTree::nearest_rec(std::int32_t id, const Vec3& q, Neighbor& best) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.axis < 0) {
        for (std::uint32_t i = n.begin; i < n.end; ++i) {
            const Neighbor c{order_[i], squared_distance(points_[order_[i]], q)};
            if (closer(c, best)) best = c;
        }
        return;
    }
    // Left subtree holds coordinates <= split, right holds >= split.
    const double diff = q[n.axis] - n.split;
    const std::int32_t first = diff < 0.0 ? n.left : n.right;
    const std::int32_t second = diff < 0.0 ? n.right : n.left;
    nearest_rec(first, q, best);
    if (diff * diff <= best.dist2) nearest_rec(second, q, best);
}

Neighbor KdTree::nearest(const Vec3& q) const {
    if (points_.empty()) throw InvalidArgument("nearest-neighbour query on an empty kd-tree");
    Neighbor best{std::numeric_limits<std::uint32_t>::max(), std::numeric_limits<double>::infinity()};
    nearest_rec(0, q, best);
    return best;
}

template <typename Visit>
void KdTree::visit_ball(std::int32_t id, const Vec3& q, double& bound2, Visit&& visit) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.axis < 0) {
        for (std::uint32_t i = n.begin; i < n.end; ++i) {
            const double d2 = squared_distance(points_[order_[i]], q);
            if (d2 <= bound2) visit(Neighbor{order_[i], d2});
        }
        return;
    }
    const double diff = q[n.axis] - n.split;
    const std::int32_t first = diff < 0.0 ? n.left : n.right;
    const std::int32_t second = diff < 0.0 ? n.right : n.left;
    visit_ball(first, q, bound2, visit);
    if (diff * diff <= bound2) visit_ball(second, q, bound2, visit);
}

std::vector<Neighbor> KdTree::knn(const Vec3& q, std::size_t k) const {
    std::vector<Neighbor> heap;  // max-heap under `closer`
    if (k == 0 || points_.empty()) return heap;
    heap.reserve(k + 1);
    double bound2 = std::numeric_limits<double>::infinity();
    visit_ball(0, q, bound2, [&](const Neighbor& c) {
        if (heap.size() < k) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end(), closer);
        } else if (closer(c, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), closer);
            heap.back() = c;
            std::push_heap(heap.begin(), heap.end(), closer);
        }
        if (heap.size() == k) bound2 = heap.front().dist2;
    });
    std::sort(heap.begin(), heap.end(), closer);
    return heap;
}

std::vector<Neighbor> KdTree::radius(const Vec3& q, double r) const {
    std::vector<Neighbor> out;
    if (points_.empty() || !(r >= 0.0)) return out;
    double bound2 = r * r;
    visit_ball(0, q, bound2, [&](const Neighbor& c) { out.push_back(c); });
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    return out;
}

}  // namespace arsafe::geom
