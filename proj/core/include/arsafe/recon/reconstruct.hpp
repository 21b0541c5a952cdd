#pragma once

#include "arsafe/error.hpp"
#include "arsafe/geom/camera.hpp"
#include "arsafe/geom/cloud.hpp"
#include "arsafe/geom/raster.hpp"

namespace arsafe::recon {

using geom::BinaryMask;
using geom::CameraIntrinsics;
using geom::DepthMap;
using geom::DisparityMap;
using geom::FrameGraph;
using geom::PointCloud;
using geom::StereoRig;

/// z = b f / d per pixel. Non-finite or non-positive disparity gives an invalid pixel.
DepthMap disparity_to_depth(const DisparityMap& disp, double baseline, double focal);
/// d = b f / z per pixel, with the same invalidation rule.
DisparityMap depth_to_disparity(const DepthMap& depth, double baseline, double focal);

/// Back-projects every valid pixel of a rectified depth map; the cloud is in Rec_L_CAM and
/// records the source pixel of each point.
PointCloud reproject_to_cloud(const DepthMap& depth, const CameraIntrinsics& k_rect);

/// Reprojection limited to mask-positive pixels with valid disparity. The rig must be rectified
/// and its rectified intrinsics must match the raster size.
PointCloud extract_masked_cloud(const DisparityMap& disp, const BinaryMask& mask, const StereoRig& rig);

/// Moves a Rec_L_CAM cloud into ECM with inv(T_ECM^L_CAM) after inv(T_L_CAM^Rec_L_CAM).
PointCloud cloud_to_ecm(const PointCloud& cloud, const FrameGraph& graph);

}  // namespace arsafe::recon
