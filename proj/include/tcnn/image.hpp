#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tcnn {

// Grayscale raster with unit-interval samples, row-major. 8-bit data enters
// and leaves through the k/255 mapping in image_io, which round-trips exactly.
struct GrayImage {
    std::size_t width = 0, height = 0;
    std::vector<float> pixels;

    GrayImage() = default;
    GrayImage(std::size_t w, std::size_t h, float fill = 0.0f) : width(w), height(h) {
        if (w == 0 || h == 0) throw std::invalid_argument("image: extents must be positive");
        pixels.assign(w * h, fill);
    }

    float& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
    float at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }

    bool valid() const { return width * height == pixels.size() && !pixels.empty(); }
};

inline float clamp01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

// Bilinear read at real coordinates; out-of-range positions clamp to the
// nearest border pixel.
inline float bilinear_sample(const GrayImage& img, double x, double y) {
    x = std::min(static_cast<double>(img.width - 1), std::max(0.0, x));
    y = std::min(static_cast<double>(img.height - 1), std::max(0.0, y));
    const std::size_t x0 = static_cast<std::size_t>(x);
    const std::size_t y0 = static_cast<std::size_t>(y);
    const std::size_t x1 = std::min(x0 + 1, img.width - 1);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    const double top = (1.0 - fx) * img.at(y0, x0) + fx * img.at(y0, x1);
    const double bottom = (1.0 - fx) * img.at(y1, x0) + fx * img.at(y1, x1);
    return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

// Separable Gaussian, kernel truncated at 3 sigma, borders clamped.
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        const double v = std::exp(-0.5 * (t / sigma) * (t / sigma));
        kernel[static_cast<std::size_t>(t + radius)] = v;
        total += v;
    }
    for (auto& v : kernel) v /= total;

    const int w = static_cast<int>(img.width), h = static_cast<int>(img.height);
    GrayImage rows(img.width, img.height), out(img.width, img.height);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                const int sx = std::clamp(x + t, 0, w - 1);
                acc += kernel[static_cast<std::size_t>(t + radius)] * img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(sx));
            }
            rows.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = static_cast<float>(acc);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                const int sy = std::clamp(y + t, 0, h - 1);
                acc += kernel[static_cast<std::size_t>(t + radius)] * rows.at(static_cast<std::size_t>(sy), static_cast<std::size_t>(x));
            }
            out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = static_cast<float>(acc);
        }
    return out;
}

}  // namespace tcnn
