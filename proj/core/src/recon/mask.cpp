#include "arsafe/recon/mask.hpp"

#include <algorithm>
#include <vector>

namespace arsafe::recon {

namespace {

// 1-D erosion along rows (dx=1) or columns: a pixel survives when its window holds no background.
void erode_line(const std::uint8_t* in, std::uint8_t* out, int n, std::ptrdiff_t stride, int r) {
    // zeros[i] = background count in [0, i)
    std::vector<int> zeros(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) zeros[i + 1] = zeros[i] + (in[i * stride] == 0 ? 1 : 0);
    for (int i = 0; i < n; ++i) {
        const int lo = i - r;
        const int hi = i + r;
        const bool clipped = lo < 0 || hi >= n;
        const int z = zeros[std::min(hi, n - 1) + 1] - zeros[std::max(lo, 0)];
        out[i * stride] = (!clipped && z == 0 && in[i * stride] != 0) ? geom::kMaskOn : geom::kMaskOff;
    }
}

// Labels 8-connected foreground components; returns per-pixel labels (0 = background) and sizes.
std::vector<std::size_t> label_components(const BinaryMask& mask, std::vector<std::uint32_t>& labels) {
    const int w = mask.width();
    const int h = mask.height();
    labels.assign(mask.size(), 0);
    std::vector<std::size_t> sizes{0};
    std::vector<std::size_t> stack;
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const std::size_t idx = static_cast<std::size_t>(v) * w + u;
            if (mask.values()[idx] == 0 || labels[idx] != 0) continue;
            const auto label = static_cast<std::uint32_t>(sizes.size());
            std::size_t count = 0;
            labels[idx] = label;
            stack.push_back(idx);
            while (!stack.empty()) {
                const std::size_t cur = stack.back();
                stack.pop_back();
                ++count;
                const int cu = static_cast<int>(cur % w);
                const int cv = static_cast<int>(cur / w);
                for (int dv = -1; dv <= 1; ++dv) {
                    for (int du = -1; du <= 1; ++du) {
                        const int nu = cu + du;
                        const int nv = cv + dv;
                        if (nu < 0 || nv < 0 || nu >= w || nv >= h) continue;
                        const std::size_t n = static_cast<std::size_t>(nv) * w + nu;
                        if (mask.values()[n] != 0 && labels[n] == 0) {
                            labels[n] = label;
                            stack.push_back(n);
                        }
                    }
                }
            }
            sizes.push_back(count);
        }
    }
    return sizes;
}

}  // namespace

BinaryMask erode_mask(const BinaryMask& mask, int radius) {
    if (radius < 0) throw InvalidArgument("erosion radius must be non-negative");
    if (radius == 0 || mask.empty()) return mask;
    const int w = mask.width();
    const int h = mask.height();
    BinaryMask tmp(w, h);
    BinaryMask out(w, h);
    for (int v = 0; v < h; ++v) erode_line(mask.row(v), tmp.row(v), w, 1, radius);
    for (int u = 0; u < w; ++u) erode_line(tmp.values().data() + u, out.values().data() + u, h, w, radius);
    return out;
}

BinaryMask remove_small_objects(const BinaryMask& mask, std::size_t min_area) {
    std::vector<std::uint32_t> labels;
    const auto sizes = label_components(mask, labels);
    BinaryMask out = mask;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (labels[i] != 0 && sizes[labels[i]] < min_area) out.values()[i] = geom::kMaskOff;
    }
    return out;
}

std::size_t count_components(const BinaryMask& mask) {
    std::vector<std::uint32_t> labels;
    return label_components(mask, labels).size() - 1;
}

BinaryMask postprocess_mask(const BinaryMask& mask, const PostProcessParams& params) {
    return remove_small_objects(erode_mask(mask, params.erosion_radius), params.min_area);
}

}  // namespace arsafe::recon
