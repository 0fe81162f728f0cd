#pragma once

#include <cmath>
#include <stdexcept>

#include "tcnn/image.hpp"
#include "tcnn/rng.hpp"

namespace tcnn {

struct AugmentConfig {
    double flip_probability = 0.5;
    double rotation_degrees = 15.0;  // uniform in +/- this range
    double width_shift = 0.1;        // fraction of width, integer pixel shifts
    double height_shift = 0.1;
    std::uint64_t seed = 0;          // base seed; per-patch streams derive from it
};

inline void validate(const AugmentConfig& cfg) {
    if (cfg.flip_probability < 0.0 || cfg.flip_probability > 1.0)
        throw std::invalid_argument("augment: flip probability must lie in [0, 1]");
    if (cfg.rotation_degrees < 0.0 || cfg.width_shift < 0.0 || cfg.height_shift < 0.0)
        throw std::invalid_argument("augment: ranges must be non-negative");
}

// Applies flip, rotation, then shift, drawing from `rng` in that fixed order.
// Transforms whose range is zero draw nothing and copy nothing, so the
// all-zero config is a bit-exact identity.
inline GrayImage augment(const GrayImage& patch, const AugmentConfig& cfg, Rng& rng) {
    validate(cfg);
    if (!patch.valid()) throw std::invalid_argument("augment: empty patch");
    GrayImage img = patch;

    if (cfg.flip_probability > 0.0 && rng.bernoulli(cfg.flip_probability)) {
        for (std::size_t y = 0; y < img.height; ++y)
            for (std::size_t x = 0; x < img.width / 2; ++x)
                std::swap(img.at(y, x), img.at(y, img.width - 1 - x));
    }

    if (cfg.rotation_degrees > 0.0) {
        const double angle = rng.uniform(-cfg.rotation_degrees, cfg.rotation_degrees) * (3.14159265358979323846 / 180.0);
        const double c = std::cos(angle), s = std::sin(angle);
        const double cx = 0.5 * static_cast<double>(img.width - 1);
        const double cy = 0.5 * static_cast<double>(img.height - 1);
        GrayImage rotated(img.width, img.height);
        for (std::size_t y = 0; y < img.height; ++y)
            for (std::size_t x = 0; x < img.width; ++x) {
                const double dx = static_cast<double>(x) - cx;
                const double dy = static_cast<double>(y) - cy;
                // inverse map; bilinear_sample clamps, giving nearest-border fill
                rotated.at(y, x) = bilinear_sample(img, cx + c * dx + s * dy, cy - s * dx + c * dy);
            }
        img = std::move(rotated);
    }

    const auto max_dx = static_cast<long>(std::floor(cfg.width_shift * static_cast<double>(img.width)));
    const auto max_dy = static_cast<long>(std::floor(cfg.height_shift * static_cast<double>(img.height)));
    if (max_dx > 0 || max_dy > 0) {
        const long dx = max_dx > 0 ? rng.uniform_int(-max_dx, max_dx) : 0;
        const long dy = max_dy > 0 ? rng.uniform_int(-max_dy, max_dy) : 0;
        if (dx != 0 || dy != 0) {
            GrayImage shifted(img.width, img.height);
            const auto w = static_cast<long>(img.width), h = static_cast<long>(img.height);
            for (long y = 0; y < h; ++y) {
                const long sy = std::clamp(y - dy, 0L, h - 1);
                for (long x = 0; x < w; ++x) {
                    const long sx = std::clamp(x - dx, 0L, w - 1);
                    shifted.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                        img.at(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
                }
            }
            img = std::move(shifted);
        }
    }
    return img;
}

}  // namespace tcnn
