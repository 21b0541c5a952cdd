#include "arsafe/geom/resample.hpp"

#include "arsafe/error.hpp"

#include <algorithm>
#include <cmath>

namespace arsafe::geom {

namespace {

constexpr double kSnap = 1e-9;

struct Tap {
    int x0, y0;
    double wx, wy;
};

// Splits a coordinate into base pixel and fraction; fractions within kSnap of an
// integer are snapped so identity maps reproduce their input exactly.
bool make_tap(double x, double y, int w, int h, Tap& tap) {
    if (!std::isfinite(x) || !std::isfinite(y)) return false;
    if (x < -kSnap || y < -kSnap || x > (w - 1) + kSnap || y > (h - 1) + kSnap) return false;
    double fx0 = std::floor(x);
    double fy0 = std::floor(y);
    double wx = x - fx0;
    double wy = y - fy0;
    if (wx > 1.0 - kSnap) {
        fx0 += 1.0;
        wx = 0.0;
    } else if (wx < kSnap) {
        wx = 0.0;
    }
    if (wy > 1.0 - kSnap) {
        fy0 += 1.0;
        wy = 0.0;
    } else if (wy < kSnap) {
        wy = 0.0;
    }
    tap.x0 = std::clamp(static_cast<int>(fx0), 0, w - 1);
    tap.y0 = std::clamp(static_cast<int>(fy0), 0, h - 1);
    tap.wx = tap.x0 == w - 1 ? 0.0 : wx;
    tap.wy = tap.y0 == h - 1 ? 0.0 : wy;
    return true;
}

// Visits the (up to four) source cells with non-zero weight.
template <typename Fn>
void for_each_weight(const Tap& t, Fn&& fn) {
    const double w00 = (1.0 - t.wx) * (1.0 - t.wy);
    const double w10 = t.wx * (1.0 - t.wy);
    const double w01 = (1.0 - t.wx) * t.wy;
    const double w11 = t.wx * t.wy;
    fn(t.x0, t.y0, w00);
    if (w10 > 0.0) fn(t.x0 + 1, t.y0, w10);
    if (w01 > 0.0) fn(t.x0, t.y0 + 1, w01);
    if (w11 > 0.0) fn(t.x0 + 1, t.y0 + 1, w11);
}

double sample(const Raster<double>& src, const Tap& tap) {
    double acc = 0.0;
    bool valid = true;
    for_each_weight(tap, [&](int u, int v, double w) {
        const double s = src(u, v);
        if (!is_valid(s)) valid = false;
        acc += w * s;
    });
    return valid ? acc : kInvalid;
}

std::uint8_t sample(const GrayImage& src, const Tap& tap) {
    double acc = 0.0;
    for_each_weight(tap, [&](int u, int v, double w) { acc += w * src(u, v); });
    return static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
}

Rgb8 sample(const RgbImage& src, const Tap& tap) {
    double r = 0.0, g = 0.0, b = 0.0;
    for_each_weight(tap, [&](int u, int v, double w) {
        const Rgb8 c = src(u, v);
        r += w * c.r;
        g += w * c.g;
        b += w * c.b;
    });
    auto q = [](double x) { return static_cast<std::uint8_t>(std::clamp(std::lround(x), 0L, 255L)); };
    return {q(r), q(g), q(b)};
}

template <typename V, typename Fill>
Raster<V> remap_impl(const Raster<V>& src, const RemapTable& table, Fill fill) {
    if (src.width() != table.source_width || src.height() != table.source_height) {
        throw InvalidArgument("remap table was built for a different source size");
    }
    Raster<V> out(table.width, table.height, fill);
    for (int v = 0; v < table.height; ++v) {
        for (int u = 0; u < table.width; ++u) {
            const std::size_t i = static_cast<std::size_t>(v) * table.width + u;
            Tap tap{};
            if (make_tap(table.src_u[i], table.src_v[i], src.width(), src.height(), tap)) out(u, v) = sample(src, tap);
        }
    }
    return out;
}

template <typename V>
Raster<V> resize_impl(const Raster<V>& src, int new_width, int new_height, V fill) {
    if (new_width <= 0 || new_height <= 0) throw InvalidArgument("resize target must be positive");
    if (src.empty()) throw InvalidArgument("cannot resize an empty raster");
    const double sx = static_cast<double>(src.width()) / new_width;
    const double sy = static_cast<double>(src.height()) / new_height;
    Raster<V> out(new_width, new_height, fill);
    for (int v = 0; v < new_height; ++v) {
        const double y = std::clamp((v + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
        for (int u = 0; u < new_width; ++u) {
            const double x = std::clamp((u + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
            Tap tap{};
            make_tap(x, y, src.width(), src.height(), tap);
            out(u, v) = sample(src, tap);
        }
    }
    return out;
}

}  // namespace

RemapTable build_rectify_map(const StereoRig& rig, StereoSide side, int out_width, int out_height) {
    const RectifiedGeometry& geo = rig.rect();
    const CameraIntrinsics& raw = side == StereoSide::Left ? rig.left : rig.right;
    const RigidTransform& to_rect = side == StereoSide::Left ? geo.left_to_rect : geo.right_to_rect;
    const CameraIntrinsics out_k = (out_width > 0 && out_height > 0)
                                       ? scale_intrinsics(geo.k_rect, out_width, out_height)
                                       : geo.k_rect;
    const Mat3 rect_to_raw = to_rect.rotation().transpose();

    RemapTable table;
    table.width = out_k.width;
    table.height = out_k.height;
    table.source_width = raw.width;
    table.source_height = raw.height;
    const std::size_t n = static_cast<std::size_t>(table.width) * table.height;
    table.src_u.assign(n, -1.0);
    table.src_v.assign(n, -1.0);
    for (int v = 0; v < table.height; ++v) {
        for (int u = 0; u < table.width; ++u) {
            const Vec3 ray((u - out_k.cx) / out_k.fx, (v - out_k.cy) / out_k.fy, 1.0);
            const auto px = project_point(raw, rect_to_raw * ray);
            if (!px) continue;
            const std::size_t i = static_cast<std::size_t>(v) * table.width + u;
            table.src_u[i] = px->x();
            table.src_v[i] = px->y();
        }
    }
    return table;
}

Raster<double> remap(const Raster<double>& src, const RemapTable& table) { return remap_impl(src, table, kInvalid); }

GrayImage remap(const GrayImage& src, const RemapTable& table, std::uint8_t fill) {
    return remap_impl(src, table, fill);
}

RgbImage remap(const RgbImage& src, const RemapTable& table, Rgb8 fill) { return remap_impl(src, table, fill); }

Raster<double> remap_image(const Raster<double>& img, const StereoRig& rig, StereoSide side) {
    return remap(img, build_rectify_map(rig, side));
}

RgbImage remap_image(const RgbImage& img, const StereoRig& rig, StereoSide side) {
    return remap(img, build_rectify_map(rig, side));
}

Raster<double> resize_bilinear(const Raster<double>& src, int new_width, int new_height) {
    return resize_impl(src, new_width, new_height, kInvalid);
}

GrayImage resize_bilinear(const GrayImage& src, int new_width, int new_height) {
    return resize_impl<std::uint8_t>(src, new_width, new_height, 0);
}

RgbImage resize_bilinear(const RgbImage& src, int new_width, int new_height) {
    return resize_impl(src, new_width, new_height, Rgb8{});
}

BinaryMask resize_nearest(const BinaryMask& src, int new_width, int new_height) {
    if (new_width <= 0 || new_height <= 0) throw InvalidArgument("resize target must be positive");
    BinaryMask out(new_width, new_height, kMaskOff);
    const double sx = static_cast<double>(src.width()) / new_width;
    const double sy = static_cast<double>(src.height()) / new_height;
    for (int v = 0; v < new_height; ++v) {
        const int y = std::min(static_cast<int>((v + 0.5) * sy), src.height() - 1);
        for (int u = 0; u < new_width; ++u) {
            const int x = std::min(static_cast<int>((u + 0.5) * sx), src.width() - 1);
            out(u, v) = src(x, y);
        }
    }
    return out;
}

DisparityMap resize_disparity(const DisparityMap& src, int new_width, int new_height) {
    DisparityMap out = resize_bilinear(src, new_width, new_height);
    const double scale = static_cast<double>(new_width) / src.width();
    for (double& d : out.values()) d *= scale;
    return out;
}

GrayImage to_gray(const RgbImage& rgb) {
    GrayImage out(rgb.width(), rgb.height());
    for (std::size_t i = 0; i < rgb.size(); ++i) {
        const Rgb8 c = rgb.values()[i];
        out.values()[i] = static_cast<std::uint8_t>((299 * c.r + 587 * c.g + 114 * c.b + 500) / 1000);
    }
    return out;
}

RgbImage to_rgb(const GrayImage& gray) {
    RgbImage out(gray.width(), gray.height());
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const std::uint8_t g = gray.values()[i];
        out.values()[i] = {g, g, g};
    }
    return out;
}

}  // namespace arsafe::geom
