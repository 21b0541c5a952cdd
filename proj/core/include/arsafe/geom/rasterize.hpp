#pragma once

#include "arsafe/geom/frames.hpp"

#include <algorithm>
#include <cmath>

namespace arsafe::geom {

/// Visits the pixel centres (integer coordinates) covered by a screen-space triangle using the
/// top-left fill rule, so triangles sharing an edge never both cover a pixel on it.
/// `fn(u, v, l0, l1, l2)` receives the barycentric weights of a, b, c.
template <typename Fn>
void rasterize_triangle(Vec2 a, Vec2 b, Vec2 c, int width, int height, Fn&& fn) {
    if (!a.allFinite() || !b.allFinite() || !c.allFinite()) return;
    auto cross = [](const Vec2& o, const Vec2& p, const Vec2& q) {
        return (p.x() - o.x()) * (q.y() - o.y()) - (p.y() - o.y()) * (q.x() - o.x());
    };
    double area = cross(a, b, c);
    if (area == 0.0) return;
    bool swapped = false;
    if (area < 0.0) {
        std::swap(b, c);
        area = -area;
        swapped = true;
    }
    // With y pointing down and positive area, the top edge runs in +x and left edges run in -y.
    auto top_left = [](const Vec2& p, const Vec2& q) {
        const double dy = q.y() - p.y();
        const double dx = q.x() - p.x();
        return (dy == 0.0 && dx > 0.0) || dy < 0.0;
    };
    const bool tl_ab = top_left(a, b), tl_bc = top_left(b, c), tl_ca = top_left(c, a);
    const int u0 = std::max(0, static_cast<int>(std::ceil(std::min({a.x(), b.x(), c.x()}))));
    const int u1 = std::min(width - 1, static_cast<int>(std::floor(std::max({a.x(), b.x(), c.x()}))));
    const int v0 = std::max(0, static_cast<int>(std::ceil(std::min({a.y(), b.y(), c.y()}))));
    const int v1 = std::min(height - 1, static_cast<int>(std::floor(std::max({a.y(), b.y(), c.y()}))));
    for (int v = v0; v <= v1; ++v) {
        for (int u = u0; u <= u1; ++u) {
            const Vec2 p(u, v);
            const double w_c = cross(a, b, p);
            const double w_a = cross(b, c, p);
            const double w_b = cross(c, a, p);
            if (w_a < 0.0 || w_b < 0.0 || w_c < 0.0) continue;
            if ((w_c == 0.0 && !tl_ab) || (w_a == 0.0 && !tl_bc) || (w_b == 0.0 && !tl_ca)) continue;
            const double la = w_a / area, lb = w_b / area, lc = w_c / area;
            if (swapped) {
                fn(u, v, la, lc, lb);
            } else {
                fn(u, v, la, lb, lc);
            }
        }
    }
}

}  // namespace arsafe::geom
