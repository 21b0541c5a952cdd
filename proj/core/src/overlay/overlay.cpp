#include "arsafe/overlay/overlay.hpp"

#include "arsafe/geom/rasterize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

namespace arsafe::overlay {

using geom::RigidTransform;

namespace {

geom::RigidTransform chain_left(const FrameGraph& g) {
    return geom::compose(g.get(FrameId::BL, FrameId::ECM), g.get(FrameId::ECM, FrameId::L_CAM));
}

geom::RigidTransform chain_right(const FrameGraph& g) {
    return geom::compose(chain_left(g), g.get(FrameId::L_CAM, FrameId::R_CAM));
}

geom::RigidTransform chain_rectified(const FrameGraph& g, const geom::StereoRig& rig, geom::StereoSide side) {
    const auto& rect = rig.rect();
    if (side == geom::StereoSide::Left) return geom::compose(chain_left(g), rect.left_to_rect);
    return geom::compose(chain_right(g), rect.right_to_rect);
}

void check_model_frame(FrameId frame) {
    if (frame != FrameId::BL) {
        throw FrameMismatch("pre-operative model must be in BL, got " + std::string(geom::to_string(frame)));
    }
}

Primitives project_mesh(const geom::TriangleMesh& m, const RigidTransform& chain, const CameraIntrinsics& k) {
    Primitives p = project_points(m.vertices, chain, k);
    p.triangles = m.triangles;
    return p;
}

std::uint8_t blend(std::uint8_t base, std::uint8_t top, double alpha) {
    return static_cast<std::uint8_t>(std::lround((1.0 - alpha) * base + alpha * top));
}

// Runs the z-buffered rasterization and reports, per covered pixel, the winning colour.
template <typename Emit>
void rasterize(int width, int height, const Primitives& prims, Rgb8 color, const OverlayStyle& style, Emit&& emit) {
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<double> zbuf(n, std::numeric_limits<double>::infinity());
    std::vector<Rgb8> cbuf(n);
    std::vector<std::uint32_t> touched;
    auto plot = [&](int u, int v, double z, Rgb8 c) {
        const std::size_t i = static_cast<std::size_t>(v) * width + u;
        if (!(z < zbuf[i])) return;
        if (std::isinf(zbuf[i])) touched.push_back(static_cast<std::uint32_t>(i));
        zbuf[i] = z;
        cbuf[i] = c;
    };
    if (style.mode == OverlayMode::Filled && !prims.triangles.empty()) {
        for (std::size_t t = 0; t < prims.triangles.size(); ++t) {
            const auto& tri = prims.triangles[t];
            if (!prims.visible[tri[0]] || !prims.visible[tri[1]] || !prims.visible[tri[2]]) continue;
            const Rgb8 c = prims.colors.size() == prims.triangles.size() ? prims.colors[t] : color;
            const double iz0 = 1.0 / prims.depth[tri[0]];
            const double iz1 = 1.0 / prims.depth[tri[1]];
            const double iz2 = 1.0 / prims.depth[tri[2]];
            geom::rasterize_triangle(prims.pixels[tri[0]], prims.pixels[tri[1]], prims.pixels[tri[2]], width, height,
                                     [&](int u, int v, double l0, double l1, double l2) {
                                         plot(u, v, 1.0 / (l0 * iz0 + l1 * iz1 + l2 * iz2), c);
                                     });
        }
    } else {
        const int r = style.splat_radius;
        for (std::size_t i = 0; i < prims.size(); ++i) {
            if (!prims.visible[i]) continue;
            const Vec2& p = prims.pixels[i];
            if (!p.allFinite()) continue;
            const Rgb8 c = prims.colors.size() == prims.size() ? prims.colors[i] : color;
            const int u0 = std::max(0, static_cast<int>(std::ceil(p.x() - r)));
            const int u1 = std::min(width - 1, static_cast<int>(std::floor(p.x() + r)));
            const int v0 = std::max(0, static_cast<int>(std::ceil(p.y() - r)));
            const int v1 = std::min(height - 1, static_cast<int>(std::floor(p.y() + r)));
            for (int v = v0; v <= v1; ++v) {
                for (int u = u0; u <= u1; ++u) {
                    const double du = u - p.x(), dv = v - p.y();
                    if (du * du + dv * dv <= static_cast<double>(r) * r) plot(u, v, prims.depth[i], c);
                }
            }
        }
    }
    for (auto i : touched) emit(i, cbuf[i]);
}

// 3x5 glyphs, rows top to bottom, bit 2 = left column.
const std::array<std::uint8_t, 5>* glyph(char ch) {
    static const std::array<std::uint8_t, 5> digits[10] = {
        {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
        {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7}};
    static const std::array<std::uint8_t, 5> dot{0, 0, 0, 0, 2};
    static const std::array<std::uint8_t, 5> c{0, 7, 4, 4, 7};
    static const std::array<std::uint8_t, 5> m{0, 7, 7, 5, 5};
    if (ch >= '0' && ch <= '9') return &digits[ch - '0'];
    if (ch == '.') return &dot;
    if (ch == 'c') return &c;
    if (ch == 'm') return &m;
    return nullptr;
}

int text_width(const std::string& s, int scale) { return static_cast<int>(s.size()) * 4 * scale - scale; }

void draw_text(RgbImage& img, const std::string& s, int u0, int v0, int scale, Rgb8 color) {
    int x = u0;
    for (char ch : s) {
        if (const auto* g = glyph(ch)) {
            for (int row = 0; row < 5; ++row) {
                for (int col = 0; col < 3; ++col) {
                    if (!((*g)[row] & (4 >> col))) continue;
                    for (int dy = 0; dy < scale; ++dy) {
                        for (int dx = 0; dx < scale; ++dx) {
                            const int u = x + col * scale + dx, v = v0 + row * scale + dy;
                            if (img.contains(u, v)) img(u, v) = color;
                        }
                    }
                }
            }
        }
        x += 4 * scale;
    }
}

void draw_gauge(RgbImage& img, int cx, int cy, double value, const GaugeStyle& st) {
    const double frac = std::clamp(value / proximity::kSafeRange, 0.0, 1.0);
    const Rgb8 fill = proximity::band_color(value);
    const double outer = st.radius, inner = st.radius - st.thickness;
    for (int v = cy - st.radius; v <= cy; ++v) {
        for (int u = cx - st.radius; u <= cx + st.radius; ++u) {
            if (!img.contains(u, v)) continue;
            const double dx = u - cx, dy = cy - v;
            const double r = std::hypot(dx, dy);
            if (r < inner || r > outer) continue;
            const double f = 1.0 - std::atan2(dy, dx) / std::numbers::pi;
            img(u, v) = (f < frac || frac >= 1.0) ? fill : st.track;
        }
    }
    for (double f : {0.0, 0.5, 1.0}) {
        const double a = std::numbers::pi * (1.0 - f);
        for (int r = static_cast<int>(inner) - 5; r < static_cast<int>(inner); ++r) {
            const int u = cx + static_cast<int>(std::lround(r * std::cos(a)));
            const int v = cy - static_cast<int>(std::lround(r * std::sin(a)));
            if (img.contains(u, v)) img(u, v) = st.tick;
        }
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1fcm", value * 100.0);
    const std::string text(buf);
    draw_text(img, text, cx - text_width(text, st.text_scale) / 2, cy + 4, st.text_scale, st.text);
}

}  // namespace

Primitives project_points(const std::vector<Vec3>& points, const RigidTransform& chain, const CameraIntrinsics& k) {
    Primitives p;
    p.pixels.reserve(points.size());
    p.depth.reserve(points.size());
    p.visible.reserve(points.size());
    for (const auto& x : points) {
        const Vec3 c = chain.apply(x);
        const auto px = geom::project_point(k, c);
        p.pixels.push_back(px ? *px : Vec2(std::nan(""), std::nan("")));
        p.depth.push_back(c.z());
        p.visible.push_back(px ? 1 : 0);
    }
    return p;
}

Primitives project_model_left(const geom::PointCloud& model, const FrameGraph& graph, const CameraIntrinsics& k_l) {
    check_model_frame(model.frame);
    return project_points(model.points, chain_left(graph), k_l);
}

Primitives project_model_left(const geom::TriangleMesh& model, const FrameGraph& graph, const CameraIntrinsics& k_l) {
    check_model_frame(model.frame);
    return project_mesh(model, chain_left(graph), k_l);
}

Primitives project_model_right(const geom::PointCloud& model, const FrameGraph& graph, const CameraIntrinsics& k_r) {
    check_model_frame(model.frame);
    return project_points(model.points, chain_right(graph), k_r);
}

Primitives project_model_right(const geom::TriangleMesh& model, const FrameGraph& graph, const CameraIntrinsics& k_r) {
    check_model_frame(model.frame);
    return project_mesh(model, chain_right(graph), k_r);
}

Primitives project_model_rectified(const geom::TriangleMesh& model, const FrameGraph& graph, const geom::StereoRig& rig,
                                   geom::StereoSide side) {
    check_model_frame(model.frame);
    return project_mesh(model, chain_rectified(graph, rig, side), rig.rect().k_rect);
}

Primitives project_model_rectified(const geom::PointCloud& model, const FrameGraph& graph, const geom::StereoRig& rig,
                                   geom::StereoSide side) {
    check_model_frame(model.frame);
    return project_points(model.points, chain_rectified(graph, rig, side), rig.rect().k_rect);
}

void OverlayStyle::validate() const {
    if (!(opacity >= 0.0 && opacity <= 1.0)) throw InvalidArgument("overlay opacity must be in [0,1]");
    if (splat_radius < 0) throw InvalidArgument("splat radius must be non-negative");
    if (gauge.radius <= gauge.thickness || gauge.thickness <= 0 || gauge.margin < 0 || gauge.text_scale <= 0) {
        throw InvalidArgument("invalid gauge geometry");
    }
}

RgbImage render_overlay(const RgbImage& frame, const Primitives& prims, Rgb8 color, const OverlayStyle& style) {
    style.validate();
    RgbImage out = frame;
    rasterize(frame.width(), frame.height(), prims, color, style, [&](std::uint32_t i, Rgb8 c) {
        Rgb8& px = out.values()[i];
        px = {blend(px.r, c.r, style.opacity), blend(px.g, c.g, style.opacity), blend(px.b, c.b, style.opacity)};
    });
    return out;
}

geom::BinaryMask overlay_coverage(int width, int height, const Primitives& prims, const OverlayStyle& style) {
    geom::BinaryMask mask(width, height);
    rasterize(width, height, prims, Rgb8{}, style, [&](std::uint32_t i, Rgb8) { mask.values()[i] = geom::kMaskOn; });
    return mask;
}

Box gauge_box(int width, const GaugeStyle& st, bool left) {
    const int cx = left ? st.margin + st.radius : width - 1 - st.margin - st.radius;
    const int cy = st.margin + st.radius;
    const int text_w = text_width("00.0cm", st.text_scale);
    const int half = std::max(st.radius, text_w / 2 + 1);
    return {cx - half, cy - st.radius, cx + half, cy + 4 + 5 * st.text_scale};
}

RgbImage render_gauges(const RgbImage& frame, const proximity::GaugeState& state, const OverlayStyle& style) {
    style.validate();
    RgbImage out = frame;
    const auto& st = style.gauge;
    const int cy = st.margin + st.radius;
    draw_gauge(out, st.margin + st.radius, cy, state.left_gauge, st);
    draw_gauge(out, frame.width() - 1 - st.margin - st.radius, cy, state.right_gauge, st);
    return out;
}

}  // namespace arsafe::overlay
