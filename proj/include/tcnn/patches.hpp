#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tcnn/image.hpp"

namespace tcnn {

struct PatchSet {
    std::size_t window = 0;
    std::vector<GrayImage> patches;
    std::vector<std::size_t> offsets;  // left edge of each window in the source
};

// Horizontal sliding window over a strip whose height equals the window.
// stride = round(window * (1 - overlap)); incomplete trailing windows drop.
inline PatchSet slice_patches(const GrayImage& image, std::size_t window = 94, double overlap = 0.5) {
    if (!image.valid()) throw std::invalid_argument("slice: empty image");
    if (image.height != window)
        throw std::invalid_argument("slice: image height must equal the window extent");
    if (image.width < window) throw std::invalid_argument("slice: image narrower than the window");
    if (overlap < 0.0 || overlap >= 1.0) throw std::invalid_argument("slice: overlap must lie in [0, 1)");
    const auto stride = static_cast<std::size_t>(std::lround(static_cast<double>(window) * (1.0 - overlap)));
    if (stride == 0) throw std::invalid_argument("slice: stride rounded to zero");

    PatchSet set;
    set.window = window;
    const std::size_t count = (image.width - window) / stride + 1;
    for (std::size_t p = 0; p < count; ++p) {
        const std::size_t left = p * stride;
        GrayImage patch(window, window);
        for (std::size_t y = 0; y < window; ++y)
            for (std::size_t x = 0; x < window; ++x) patch.at(y, x) = image.at(y, left + x);
        set.patches.push_back(std::move(patch));
        set.offsets.push_back(left);
    }
    return set;
}

}  // namespace tcnn
