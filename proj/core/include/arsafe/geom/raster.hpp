#pragma once

#include "arsafe/error.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

namespace arsafe::geom {

struct Rgb8 {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb8&) const = default;
};

/// Row-major width x height grid. Scalar rasters mark invalid cells with quiet NaN.
template <typename V>
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, V fill = V{}) : width_(width), height_(height) {
        if (width < 0 || height < 0) throw InvalidArgument("raster dimensions must be non-negative");
        values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    bool same_shape(int w, int h) const { return width_ == w && height_ == h; }
    template <typename U>
    bool same_shape(const Raster<U>& o) const {
        return width_ == o.width() && height_ == o.height();
    }

    V& operator()(int u, int v) { return values_[index(u, v)]; }
    const V& operator()(int u, int v) const { return values_[index(u, v)]; }
    V& at(int u, int v) {
        check(u, v);
        return values_[index(u, v)];
    }
    const V& at(int u, int v) const {
        check(u, v);
        return values_[index(u, v)];
    }
    bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }

    std::vector<V>& values() { return values_; }
    const std::vector<V>& values() const { return values_; }
    V* row(int v) { return values_.data() + static_cast<std::size_t>(v) * width_; }
    const V* row(int v) const { return values_.data() + static_cast<std::size_t>(v) * width_; }

    bool operator==(const Raster&) const = default;

private:
    std::size_t index(int u, int v) const {
        return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u);
    }
    void check(int u, int v) const {
        if (!contains(u, v)) {
            throw InvalidArgument("raster access (" + std::to_string(u) + "," + std::to_string(v) + ") outside " +
                                  std::to_string(width_) + "x" + std::to_string(height_));
        }
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<V> values_;
};

inline constexpr double kInvalid = std::numeric_limits<double>::quiet_NaN();
inline bool is_valid(double v) { return std::isfinite(v); }

/// Per-pixel disparity in pixels (left rectified reference).
using DisparityMap = Raster<double>;
/// Per-pixel depth z in meters.
using DepthMap = Raster<double>;
/// Per-pixel scalar in [0,1] (segmentation probability).
using ProbabilityMap = Raster<double>;
/// 0 = background, 255 = foreground.
using BinaryMask = Raster<std::uint8_t>;
using GrayImage = Raster<std::uint8_t>;
using RgbImage = Raster<Rgb8>;

inline constexpr std::uint8_t kMaskOn = 255;
inline constexpr std::uint8_t kMaskOff = 0;

inline std::size_t count_on(const BinaryMask& m) {
    std::size_t n = 0;
    for (auto v : m.values()) n += v != 0 ? 1 : 0;
    return n;
}

inline std::size_t count_valid(const Raster<double>& r) {
    std::size_t n = 0;
    for (double v : r.values()) n += is_valid(v) ? 1 : 0;
    return n;
}

/// Equality of the underlying bytes (NaN cells compare equal when their payloads do).
template <typename V>
bool bitwise_equal(const Raster<V>& a, const Raster<V>& b) {
    return a.same_shape(b) && (a.empty() || std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(V)) == 0);
}

GrayImage to_gray(const RgbImage& rgb);
RgbImage to_rgb(const GrayImage& gray);

}  // namespace arsafe::geom
