#include "arsafe/recon/reconstruct.hpp"

#include <string>

namespace arsafe::recon {

using geom::FrameId;
using geom::Vec3;

namespace {

void check_positive(double baseline, double focal) {
    if (!(baseline > 0.0)) throw InvalidArgument("baseline must be positive");
    if (!(focal > 0.0)) throw InvalidArgument("focal length must be positive");
}

geom::Raster<double> reciprocal_scaled(const geom::Raster<double>& in, double bf) {
    geom::Raster<double> out(in.width(), in.height(), geom::kInvalid);
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double d = in.values()[i];
        if (geom::is_valid(d) && d > 0.0) out.values()[i] = bf / d;
    }
    return out;
}

}  // namespace

DepthMap disparity_to_depth(const DisparityMap& disp, double baseline, double focal) {
    check_positive(baseline, focal);
    return reciprocal_scaled(disp, baseline * focal);
}

DisparityMap depth_to_disparity(const DepthMap& depth, double baseline, double focal) {
    check_positive(baseline, focal);
    return reciprocal_scaled(depth, baseline * focal);
}

PointCloud reproject_to_cloud(const DepthMap& depth, const CameraIntrinsics& k_rect) {
    if (k_rect.has_distortion()) throw InvalidArgument("reprojection expects rectified (distortion-free) intrinsics");
    PointCloud cloud(FrameId::Rec_L_CAM);
    for (int v = 0; v < depth.height(); ++v) {
        const double* row = depth.row(v);
        for (int u = 0; u < depth.width(); ++u) {
            const double z = row[u];
            if (!geom::is_valid(z) || !(z > 0.0)) continue;
            cloud.points.emplace_back((u - k_rect.cx) * z / k_rect.fx, (v - k_rect.cy) * z / k_rect.fy, z);
            cloud.pixels.push_back({u, v});
        }
    }
    return cloud;
}

PointCloud extract_masked_cloud(const DisparityMap& disp, const BinaryMask& mask, const StereoRig& rig) {
    if (!disp.same_shape(mask)) {
        throw InvalidArgument("disparity " + std::to_string(disp.width()) + "x" + std::to_string(disp.height()) +
                              " and mask " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                              " differ in size");
    }
    const auto& rect = rig.rect();
    const CameraIntrinsics& k = rect.k_rect;
    if (!disp.same_shape(k.width, k.height)) throw InvalidArgument("disparity size does not match the rectified camera");
    const double bf = rig.baseline() * rect.focal;
    PointCloud cloud(FrameId::Rec_L_CAM);
    for (int v = 0; v < disp.height(); ++v) {
        const double* drow = disp.row(v);
        const std::uint8_t* mrow = mask.row(v);
        for (int u = 0; u < disp.width(); ++u) {
            const double d = drow[u];
            if (mrow[u] == 0 || !geom::is_valid(d) || !(d > 0.0)) continue;
            const double z = bf / d;
            cloud.points.emplace_back((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z);
            cloud.pixels.push_back({u, v});
        }
    }
    return cloud;
}

PointCloud cloud_to_ecm(const PointCloud& cloud, const FrameGraph& graph) {
    if (cloud.frame != FrameId::Rec_L_CAM) {
        throw FrameMismatch("cloud_to_ecm expects a Rec_L_CAM cloud, got " + std::string(geom::to_string(cloud.frame)));
    }
    const auto rect = graph.get(FrameId::L_CAM, FrameId::Rec_L_CAM);
    const auto hand_eye = graph.get(FrameId::ECM, FrameId::L_CAM);
    return geom::transform_points(geom::compose(geom::invert(rect), geom::invert(hand_eye)), cloud);
}

}  // namespace arsafe::recon
