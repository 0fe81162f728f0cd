#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tcnn/image.hpp"
#include "tcnn/tensor.hpp"

namespace tcnn {

// Displacement per angle, for distance d: 0 deg -> (+d, 0), 45 -> (+d, -d),
// 90 -> (0, -d), 135 -> (-d, -d). dx is rightward, dy downward.
enum class GlcmAngle { deg0, deg45, deg90, deg135 };

struct GlcmConfig {
    std::size_t levels = 16;
    std::size_t distance = 1;
    std::vector<GlcmAngle> angles = {GlcmAngle::deg0, GlcmAngle::deg45, GlcmAngle::deg90,
                                     GlcmAngle::deg135};
};

namespace detail {

inline std::pair<int, int> glcm_offset(GlcmAngle angle, int d) {
    switch (angle) {
        case GlcmAngle::deg0: return {d, 0};
        case GlcmAngle::deg45: return {d, -d};
        case GlcmAngle::deg90: return {0, -d};
        case GlcmAngle::deg135: return {-d, -d};
    }
    throw std::invalid_argument("glcm: unknown angle");
}

}  // namespace detail

// Quantize to `levels` uniform bins spanning the image's own value range.
// A constant image has no range and maps entirely to level 0.
inline std::vector<std::uint8_t> quantize_levels(const GrayImage& img, std::size_t levels) {
    if (levels < 2 || levels > 256) throw std::invalid_argument("quantize_levels: levels must be in [2, 256]");
    float lo = img.pixels[0], hi = img.pixels[0];
    for (float v : img.pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<std::uint8_t> out(img.pixels.size(), 0);
    if (hi <= lo) return out;
    const double scale = static_cast<double>(levels) / (static_cast<double>(hi) - lo);
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto q = static_cast<long>((static_cast<double>(img.pixels[i]) - lo) * scale);
        out[i] = static_cast<std::uint8_t>(std::min<long>(q, static_cast<long>(levels) - 1));
    }
    return out;
}

// Symmetric normalized co-occurrence matrix, averaged over the configured
// angles. Each angle's pair counts are symmetrized (both pixel orders count),
// normalized to sum 1, and the per-angle matrices are averaged.
inline Tensor<double> glcm(const GrayImage& img, const GlcmConfig& cfg = {}) {
    if (cfg.distance == 0) throw std::invalid_argument("glcm: distance must be positive");
    if (cfg.angles.empty()) throw std::invalid_argument("glcm: need at least one angle");
    const auto levels = quantize_levels(img, cfg.levels);
    const std::size_t n = cfg.levels;
    const int d = static_cast<int>(cfg.distance);
    const int w = static_cast<int>(img.width), h = static_cast<int>(img.height);

    Tensor<double> avg({n, n});
    for (GlcmAngle angle : cfg.angles) {
        const auto [dx, dy] = detail::glcm_offset(angle, d);
        std::vector<double> counts(n * n, 0.0);
        double total = 0.0;
        for (int y = 0; y < h; ++y) {
            const int y2 = y + dy;
            if (y2 < 0 || y2 >= h) continue;
            for (int x = 0; x < w; ++x) {
                const int x2 = x + dx;
                if (x2 < 0 || x2 >= w) continue;
                const std::size_t i = levels[static_cast<std::size_t>(y) * img.width + static_cast<std::size_t>(x)];
                const std::size_t j = levels[static_cast<std::size_t>(y2) * img.width + static_cast<std::size_t>(x2)];
                counts[i * n + j] += 1.0;
                counts[j * n + i] += 1.0;
                total += 2.0;
            }
        }
        if (total == 0.0) throw std::invalid_argument("glcm: image too small for the displacement");
        const double weight = 1.0 / (total * static_cast<double>(cfg.angles.size()));
        for (std::size_t i = 0; i < n * n; ++i) avg.data[i] += counts[i] * weight;
    }
    return avg;
}

namespace detail {

inline double xlog2(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

}  // namespace detail

// The 13 classical co-occurrence statistics, in this order: angular second
// moment, contrast, correlation, variance, inverse difference moment, sum
// average, sum variance, sum entropy, entropy, difference variance,
// difference entropy, and the two information measures of correlation.
// Entropies are in bits; sum variance is taken about the sum average.
inline std::vector<double> haralick_features(const Tensor<double>& p) {
    if (p.shape.size() != 2 || p.shape[0] != p.shape[1] || p.shape[0] < 2)
        throw std::invalid_argument("haralick: expected a square co-occurrence matrix");
    const std::size_t n = p.shape[0];
    double sum = 0.0;
    for (double v : p.data) {
        if (v < 0.0) throw std::invalid_argument("haralick: negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("haralick: matrix is not normalized");

    std::vector<double> px(n, 0.0), py(n, 0.0);
    std::vector<double> psum(2 * n - 1, 0.0), pdiff(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double v = p.data[i * n + j];
            px[i] += v;
            py[j] += v;
            psum[i + j] += v;
            pdiff[i > j ? i - j : j - i] += v;
        }

    double mu_x = 0.0, mu_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mu_x += static_cast<double>(i) * px[i];
        mu_y += static_cast<double>(i) * py[i];
    }
    double var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        var_x += (i - mu_x) * (i - mu_x) * px[i];
        var_y += (i - mu_y) * (i - mu_y) * py[i];
    }

    double asm_ = 0.0, contrast = 0.0, corr_num = 0.0, variance = 0.0, idm = 0.0, entropy = 0.0;
    double hxy1 = 0.0, hxy2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double v = p.data[i * n + j];
            const double di = static_cast<double>(i) - static_cast<double>(j);
            asm_ += v * v;
            corr_num += static_cast<double>(i) * static_cast<double>(j) * v;
            variance += (i - mu_x) * (i - mu_x) * v;
            idm += v / (1.0 + di * di);
            entropy -= detail::xlog2(v);
            const double marg = px[i] * py[j];
            if (v > 0.0 && marg > 0.0) hxy1 -= v * std::log2(marg);
            hxy2 -= detail::xlog2(marg);
        }
    for (std::size_t k = 0; k < n; ++k) contrast += static_cast<double>(k) * static_cast<double>(k) * pdiff[k];

    const double sigma = std::sqrt(var_x * var_y);
    const double correlation = sigma > 1e-12 ? (corr_num - mu_x * mu_y) / sigma : 1.0;

    double sum_avg = 0.0, sum_entropy = 0.0;
    for (std::size_t k = 0; k < psum.size(); ++k) {
        sum_avg += static_cast<double>(k) * psum[k];
        sum_entropy -= detail::xlog2(psum[k]);
    }
    double sum_var = 0.0;
    for (std::size_t k = 0; k < psum.size(); ++k) sum_var += (k - sum_avg) * (k - sum_avg) * psum[k];

    double diff_avg = 0.0, diff_entropy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        diff_avg += static_cast<double>(k) * pdiff[k];
        diff_entropy -= detail::xlog2(pdiff[k]);
    }
    double diff_var = 0.0;
    for (std::size_t k = 0; k < n; ++k) diff_var += (k - diff_avg) * (k - diff_avg) * pdiff[k];

    double hx = 0.0, hy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        hx -= detail::xlog2(px[i]);
        hy -= detail::xlog2(py[i]);
    }
    const double hmax = std::max(hx, hy);
    const double imc1 = hmax > 1e-12 ? (entropy - hxy1) / hmax : 0.0;
    const double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - entropy))));

    return {asm_,    contrast,    correlation, variance,  idm,      sum_avg, sum_var,
            sum_entropy, entropy, diff_var,    diff_entropy, imc1,  imc2};
}

}  // namespace tcnn
