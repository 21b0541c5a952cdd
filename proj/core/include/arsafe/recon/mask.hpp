#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/raster.hpp"

namespace arsafe::recon {

using geom::BinaryMask;

/// Erosion with a (2r+1)x(2r+1) square; pixels beyond the image border count as background.
BinaryMask erode_mask(const BinaryMask& mask, int radius);

/// Clears 8-connected foreground components with fewer than `min_area` pixels.
BinaryMask remove_small_objects(const BinaryMask& mask, std::size_t min_area);

/// Number of 8-connected foreground components.
std::size_t count_components(const BinaryMask& mask);

struct PostProcessParams {
    int erosion_radius = 2;
    std::size_t min_area = 64;
};

/// Erosion followed by small-object removal.
BinaryMask postprocess_mask(const BinaryMask& mask, const PostProcessParams& params = {});

}  // namespace arsafe::recon
