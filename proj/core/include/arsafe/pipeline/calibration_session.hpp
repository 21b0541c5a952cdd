#pragma once

#include "arsafe/calib/planar.hpp"
#include "arsafe/error.hpp"
#include "arsafe/pipeline/session.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace arsafe::pipeline {

struct CalibrationSessionParams {
    std::uint64_t seed = 11;
    double pixel_sigma = 0.5;  // px, per image coordinate
    double ee_noise = 0.001;   // m, RMS length of the kinematic position error
    calib::ChessboardSpec board;
    int views = 12;
    double board_depth_min = 0.12;  // m
    double board_depth_max = 0.20;
    std::size_t hand_hand_points = 20;
    std::size_t hand_eye_points = 40;
    double hand_eye_depth_min = 0.20;  // m, tip distance from the camera
    double hand_eye_depth_max = 0.30;
    std::size_t regis_frames = 10;

    void validate() const;
};

struct ErrorStat {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation
    std::vector<double> samples;
};
ErrorStat error_stat(std::vector<double> samples);

struct CalibrationSessionReport {
    ErrorStat e_cam;        // px, per-view RMS corner reprojection error
    ErrorStat e_hand_hand;  // m, per-point |left - T right|
    ErrorStat e_hand_eye;   // px, per-point tip reprojection error
    ErrorStat e_regis;      // m, per-frame registration error
    geom::CameraIntrinsics intrinsics;
    Calibration calibration;  // estimated
};

/// Fully simulated calibration run: chessboard views for the camera, touched point pairs for
/// the two arms, tip observations for arm-to-camera, then a noisy pipeline session for the
/// registration error.
CalibrationSessionReport run_calibration_session(const SessionSetup& setup, const CalibrationSessionParams& params);

std::string format_error_table(const CalibrationSessionReport& r);
nlohmann::json to_json(const CalibrationSessionReport& r);

}  // namespace arsafe::pipeline
