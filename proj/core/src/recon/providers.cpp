#include "arsafe/recon/providers.hpp"

#include "arsafe/geom/io.hpp"

#include <cstdio>

namespace arsafe::recon {

DisparityMap GroundTruthDepthProvider::disparity(const StereoFrame& frame) {
    if (!frame.gt_disparity) throw InvalidArgument("frame " + std::to_string(frame.index) + " has no ground-truth disparity");
    return *frame.gt_disparity;
}

BinaryMask GroundTruthMaskProvider::mask(const StereoFrame& frame) {
    if (!frame.gt_mask) throw InvalidArgument("frame " + std::to_string(frame.index) + " has no ground-truth mask");
    return *frame.gt_mask;
}

FileDepthProvider::FileDepthProvider(std::filesystem::path root, std::string file_name)
    : root_(std::move(root)), file_name_(std::move(file_name)) {}

DisparityMap FileDepthProvider::disparity(const StereoFrame& frame) {
    return geom::read_pfm(root_ / frame_dir_name(frame.index) / file_name_);
}

FileMaskProvider::FileMaskProvider(std::filesystem::path root, std::string file_name)
    : root_(std::move(root)), file_name_(std::move(file_name)) {}

BinaryMask FileMaskProvider::mask(const StereoFrame& frame) {
    BinaryMask m = geom::read_pgm(root_ / frame_dir_name(frame.index) / file_name_);
    for (auto& v : m.values()) v = v != 0 ? geom::kMaskOn : geom::kMaskOff;
    return m;
}

std::string frame_dir_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04zu", index);
    return buf;
}

}  // namespace arsafe::recon
