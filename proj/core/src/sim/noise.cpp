#include "arsafe/sim/noise.hpp"

#include <algorithm>
#include <cmath>

namespace arsafe::sim {

using nlohmann::json;

void NoiseSpec::validate() const {
    if (!(disparity_sigma >= 0.0) || !(disparity_step >= 0.0) || !(blob_rate >= 0.0) || !(ee_sigma >= 0.0) ||
        mask_jitter < 0 || blob_size < 0) {
        throw InvalidArgument("noise parameters must be non-negative");
    }
    if (!(dropout >= 0.0 && dropout <= 1.0)) throw InvalidArgument("dropout must be in [0,1]");
}

bool NoiseSpec::is_zero() const {
    return disparity_sigma == 0.0 && disparity_step == 0.0 && dropout == 0.0 && mask_jitter == 0 &&
           (blob_rate == 0.0 || blob_size == 0) && ee_sigma == 0.0;
}

DisparityMap apply_disparity_noise(const DisparityMap& disp, const NoiseSpec& spec, Rng& rng) {
    spec.validate();
    DisparityMap out = disp;
    for (auto& d : out.values()) {
        if (!geom::is_valid(d)) continue;
        if (spec.disparity_sigma > 0.0) d += spec.disparity_sigma * normal(rng);
        if (spec.disparity_step > 0.0) d = std::round(d / spec.disparity_step) * spec.disparity_step;
        if (spec.dropout > 0.0 && uniform01(rng) < spec.dropout) d = geom::kInvalid;
    }
    return out;
}

BinaryMask apply_mask_noise(const BinaryMask& mask, const NoiseSpec& spec, Rng& rng) {
    spec.validate();
    BinaryMask out = mask;
    const int w = mask.width(), h = mask.height();
    if (spec.mask_jitter > 0) {
        const int r = spec.mask_jitter;
        const auto span = static_cast<std::uint64_t>(2 * r + 1);
        for (int v = 0; v < h; ++v) {
            for (int u = 0; u < w; ++u) {
                const int su = std::clamp(u + static_cast<int>(uniform_index(rng, span)) - r, 0, w - 1);
                const int sv = std::clamp(v + static_cast<int>(uniform_index(rng, span)) - r, 0, h - 1);
                out(u, v) = mask(su, sv);
            }
        }
    }
    if (spec.blob_rate > 0.0 && spec.blob_size > 0 && w > 0 && h > 0) {
        auto count = static_cast<int>(std::floor(spec.blob_rate));
        if (uniform01(rng) < spec.blob_rate - count) ++count;
        for (int i = 0; i < count; ++i) {
            const int u0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(w)));
            const int v0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(h)));
            for (int v = v0; v < std::min(h, v0 + spec.blob_size); ++v) {
                for (int u = u0; u < std::min(w, u0 + spec.blob_size); ++u) out(u, v) = geom::kMaskOn;
            }
        }
    }
    return out;
}

RenderedViews apply_noise(const RenderedViews& views, const NoiseSpec& spec, std::uint64_t seed) {
    RenderedViews out = views;
    auto rd = make_rng(seed, 0);
    auto rm = make_rng(seed, 1);
    out.disp_gt = apply_disparity_noise(views.disp_gt, spec, rd);
    out.mask_gt = apply_mask_noise(views.mask_gt, spec, rm);
    return out;
}

Vec3 perturb_position(const Vec3& p, double sigma, Rng& rng) {
    if (!(sigma >= 0.0)) throw InvalidArgument("noise sigma must be non-negative");
    if (sigma == 0.0) return p;
    const double x = normal(rng), y = normal(rng), z = normal(rng);
    return p + sigma * Vec3(x, y, z);
}

NoisyDepthProvider::NoisyDepthProvider(NoiseSpec spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
    spec_.validate();
}

DisparityMap NoisyDepthProvider::disparity(const recon::StereoFrame& frame) {
    if (!frame.gt_disparity) throw InvalidArgument("noisy depth provider needs ground-truth disparity");
    auto rng = make_rng(mix_seed(seed_, frame.index), 0);
    return apply_disparity_noise(*frame.gt_disparity, spec_, rng);
}

NoisyMaskProvider::NoisyMaskProvider(NoiseSpec spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
    spec_.validate();
}

BinaryMask NoisyMaskProvider::mask(const recon::StereoFrame& frame) {
    if (!frame.gt_mask) throw InvalidArgument("noisy mask provider needs a ground-truth mask");
    auto rng = make_rng(mix_seed(seed_, frame.index), 1);
    return apply_mask_noise(*frame.gt_mask, spec_, rng);
}

void to_json(json& j, const NoiseSpec& n) {
    j = json{{"disparity_sigma_px", n.disparity_sigma}, {"disparity_step_px", n.disparity_step},
             {"dropout", n.dropout},                    {"mask_jitter_px", n.mask_jitter},
             {"blob_rate", n.blob_rate},                {"blob_size_px", n.blob_size},
             {"ee_sigma_m", n.ee_sigma}};
}

NoiseSpec noise_from_json(const json& j) {
    NoiseSpec n;
    try {
        n.disparity_sigma = j.value("disparity_sigma_px", 0.0);
        n.disparity_step = j.value("disparity_step_px", 0.0);
        n.dropout = j.value("dropout", 0.0);
        n.mask_jitter = j.value("mask_jitter_px", 0);
        n.blob_rate = j.value("blob_rate", 0.0);
        n.blob_size = j.value("blob_size_px", 0);
        n.ee_sigma = j.value("ee_sigma_m", 0.0);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed noise spec: ") + e.what());
    }
    n.validate();
    return n;
}

}  // namespace arsafe::sim
