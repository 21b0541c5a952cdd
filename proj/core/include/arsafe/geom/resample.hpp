#pragma once

#include "arsafe/geom/camera.hpp"
#include "arsafe/geom/raster.hpp"

#include <vector>

namespace arsafe::geom {

/// Per-output-pixel source coordinates. Negative/NaN entries mean "no source pixel".
struct RemapTable {
    int width = 0;
    int height = 0;
    int source_width = 0;
    int source_height = 0;
    std::vector<double> src_u;
    std::vector<double> src_v;
};

/// Inverse rectification map for one side of a rectified rig. The output camera is the
/// rectified intrinsics scaled to out_width x out_height (0 keeps the rectified size),
/// so rectification and resizing happen in one resampling pass.
RemapTable build_rectify_map(const StereoRig& rig, StereoSide side, int out_width = 0, int out_height = 0);

/// Bilinear resampling through `table`. Scalar cells without a full valid source
/// neighborhood become NaN; 8-bit images get `fill` there.
Raster<double> remap(const Raster<double>& src, const RemapTable& table);
GrayImage remap(const GrayImage& src, const RemapTable& table, std::uint8_t fill = 0);
RgbImage remap(const RgbImage& src, const RemapTable& table, Rgb8 fill = {});

Raster<double> remap_image(const Raster<double>& img, const StereoRig& rig, StereoSide side);
RgbImage remap_image(const RgbImage& img, const StereoRig& rig, StereoSide side);

/// Pixel-center aligned bilinear resize with edge replication.
Raster<double> resize_bilinear(const Raster<double>& src, int new_width, int new_height);
GrayImage resize_bilinear(const GrayImage& src, int new_width, int new_height);
RgbImage resize_bilinear(const RgbImage& src, int new_width, int new_height);
/// Nearest-neighbour resize; used for masks so labels stay binary.
BinaryMask resize_nearest(const BinaryMask& src, int new_width, int new_height);
/// Bilinear resize whose values are additionally multiplied by new_width / old_width.
DisparityMap resize_disparity(const DisparityMap& src, int new_width, int new_height);

}  // namespace arsafe::geom
