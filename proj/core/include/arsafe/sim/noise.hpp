#pragma once

#include "arsafe/error.hpp"
#include "arsafe/random.hpp"
#include "arsafe/recon/providers.hpp"
#include "arsafe/sim/scene.hpp"

#include <nlohmann/json.hpp>

namespace arsafe::sim {

/// Corruptions standing in for network and kinematic error. Zero everywhere means none.
struct NoiseSpec {
    double disparity_sigma = 0.0;  // px, additive Gaussian
    double disparity_step = 0.0;   // px, quantization (0 = off)
    double dropout = 0.0;          // fraction of valid pixels set invalid
    int mask_jitter = 0;           // px, boundary jitter radius
    double blob_rate = 0.0;        // spurious blobs per frame (expected)
    int blob_size = 0;             // px, side of a spurious square blob
    double ee_sigma = 0.0;         // m, per-axis Gaussian on end-effector positions

    void validate() const;
    bool is_zero() const;
};

/// Gaussian noise, then quantization, then dropout. Invalid pixels stay invalid.
DisparityMap apply_disparity_noise(const DisparityMap& disp, const NoiseSpec& spec, Rng& rng);
/// Boundary jitter, then blob injection.
BinaryMask apply_mask_noise(const BinaryMask& mask, const NoiseSpec& spec, Rng& rng);
/// Corrupts disp_gt and mask_gt of `views` (depth_gt and images untouched). Same seed, same bytes.
RenderedViews apply_noise(const RenderedViews& views, const NoiseSpec& spec, std::uint64_t seed);
Vec3 perturb_position(const Vec3& p, double sigma, Rng& rng);

/// Ground truth plus NoiseSpec corruption, seeded per frame index.
class NoisyDepthProvider final : public recon::DepthProvider {
public:
    NoisyDepthProvider(NoiseSpec spec, std::uint64_t seed);
    DisparityMap disparity(const recon::StereoFrame& frame) override;

private:
    NoiseSpec spec_;
    std::uint64_t seed_;
};

class NoisyMaskProvider final : public recon::MaskProvider {
public:
    NoisyMaskProvider(NoiseSpec spec, std::uint64_t seed);
    BinaryMask mask(const recon::StereoFrame& frame) override;

private:
    NoiseSpec spec_;
    std::uint64_t seed_;
};

void to_json(nlohmann::json& j, const NoiseSpec& n);
NoiseSpec noise_from_json(const nlohmann::json& j);

}  // namespace arsafe::sim
