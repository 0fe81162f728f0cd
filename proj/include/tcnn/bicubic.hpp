#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tcnn/image.hpp"

namespace tcnn {

namespace detail {

// Cubic convolution weight, a = -0.5 (reproduces linear functions exactly).
inline double cubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

}  // namespace detail

// 4x4 cubic-convolution resampling with half-pixel-centered mapping. Border
// taps replicate the edge pixel; each output divides by the realized weight
// sum so constants survive bit-for-bit.
inline GrayImage upscale_bicubic(const GrayImage& src, std::size_t target) {
    if (!src.valid()) throw std::invalid_argument("bicubic: empty image");
    if (target < src.width || target < src.height)
        throw std::invalid_argument("bicubic: target below the source extent");

    const double sx = static_cast<double>(src.width) / static_cast<double>(target);
    const double sy = static_cast<double>(src.height) / static_cast<double>(target);
    const auto iw = static_cast<std::ptrdiff_t>(src.width);
    const auto ih = static_cast<std::ptrdiff_t>(src.height);

    GrayImage out(target, target);
    for (std::size_t oy = 0; oy < target; ++oy) {
        const double fy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
        const auto y0 = static_cast<std::ptrdiff_t>(std::floor(fy));
        for (std::size_t ox = 0; ox < target; ++ox) {
            const double fx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
            const auto x0 = static_cast<std::ptrdiff_t>(std::floor(fx));
            double acc = 0.0, wsum = 0.0;
            for (std::ptrdiff_t dy = -1; dy <= 2; ++dy) {
                const double wy = detail::cubic_weight(fy - static_cast<double>(y0 + dy));
                const std::ptrdiff_t yy = std::clamp<std::ptrdiff_t>(y0 + dy, 0, ih - 1);
                for (std::ptrdiff_t dx = -1; dx <= 2; ++dx) {
                    const double w = wy * detail::cubic_weight(fx - static_cast<double>(x0 + dx));
                    const std::ptrdiff_t xx = std::clamp<std::ptrdiff_t>(x0 + dx, 0, iw - 1);
                    acc += w * src.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
                    wsum += w;
                }
            }
            out.at(oy, ox) = clamp01(static_cast<float>(acc / wsum));
        }
    }
    return out;
}

}  // namespace tcnn
