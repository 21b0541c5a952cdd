#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/raster.hpp"

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>

namespace arsafe::recon {

using geom::BinaryMask;
using geom::DisparityMap;
using geom::RgbImage;

/// Everything a provider may look at for one rectified stereo frame. Ground-truth rasters
/// are attached by the simulator; file and network sources ignore them.
struct StereoFrame {
    std::size_t index = 0;
    RgbImage left;
    RgbImage right;
    std::optional<DisparityMap> gt_disparity;
    std::optional<BinaryMask> gt_mask;
};

/// Stand-in for a stereo network: left-referenced disparity for a rectified pair.
class DepthProvider {
public:
    virtual ~DepthProvider() = default;
    virtual DisparityMap disparity(const StereoFrame& frame) = 0;
};

/// Stand-in for a segmentation network: binary mask of the target in the left image.
class MaskProvider {
public:
    virtual ~MaskProvider() = default;
    virtual BinaryMask mask(const StereoFrame& frame) = 0;
};

class GroundTruthDepthProvider final : public DepthProvider {
public:
    DisparityMap disparity(const StereoFrame& frame) override;
};

class GroundTruthMaskProvider final : public MaskProvider {
public:
    BinaryMask mask(const StereoFrame& frame) override;
};

/// Reads {root}/{index:04d}/disp_gt.pfm (or `file_name`).
class FileDepthProvider final : public DepthProvider {
public:
    explicit FileDepthProvider(std::filesystem::path root, std::string file_name = "disp_gt.pfm");
    DisparityMap disparity(const StereoFrame& frame) override;

private:
    std::filesystem::path root_;
    std::string file_name_;
};

/// Reads {root}/{index:04d}/mask_gt.pgm (or `file_name`).
class FileMaskProvider final : public MaskProvider {
public:
    explicit FileMaskProvider(std::filesystem::path root, std::string file_name = "mask_gt.pgm");
    BinaryMask mask(const StereoFrame& frame) override;

private:
    std::filesystem::path root_;
    std::string file_name_;
};

/// Directory name used for frame `index` in datasets.
std::string frame_dir_name(std::size_t index);

}  // namespace arsafe::recon
