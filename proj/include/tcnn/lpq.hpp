#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tcnn/image.hpp"

namespace tcnn {

struct LpqConfig {
    std::size_t window = 9;  // odd, >= 3; the STFT frequency is a = 1/window
    bool whiten = false;     // decorrelate the 8 coefficient parts before quantizing
};

namespace detail {

// Coefficients whose magnitude cannot be told from zero quantize as +0, so
// bit = 1. Without this, analytically-zero sums (constant regions) would take
// their sign from rounding noise.
inline constexpr double lpq_dead_zone = 1e-9;

// Cyclic Jacobi eigendecomposition for small symmetric matrices. Returns
// eigenvalues (descending) with matching eigenvector columns; each vector's
// largest-magnitude component is made positive so the basis is reproducible.
inline void jacobi_eigen(std::vector<double>& a, std::size_t n, std::vector<double>& values,
                         std::vector<double>& vectors) {
    vectors.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) vectors[i * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vectors[k * n + p], vkq = vectors[k * n + q];
                    vectors[k * n + p] = c * vkp - s * vkq;
                    vectors[k * n + q] = s * vkp + c * vkq;
                }
            }
    }

    values.resize(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = a[i * n + i];
    // order by descending eigenvalue (stable: index breaks ties)
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (values[order[j]] > values[order[i]]) std::swap(order[i], order[j]);

    std::vector<double> sorted_vals(n), sorted_vecs(n * n);
    for (std::size_t c = 0; c < n; ++c) {
        sorted_vals[c] = values[order[c]];
        std::size_t peak = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (std::abs(vectors[k * n + order[c]]) > std::abs(vectors[peak * n + order[c]])) peak = k;
        const double flip = vectors[peak * n + order[c]] < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) sorted_vecs[k * n + c] = flip * vectors[k * n + order[c]];
    }
    values = std::move(sorted_vals);
    vectors = std::move(sorted_vecs);
}

// Decorrelation basis for the 8 coefficient parts, from the standard
// exponentially-decaying pixel correlation model (rho = 0.9).
inline std::array<std::array<double, 8>, 8> lpq_whitening_basis(std::size_t window) {
    const int r = static_cast<int>(window - 1) / 2;
    const double a = 1.0 / static_cast<double>(window);
    const double two_pi = 6.283185307179586476925286766559;
    const std::size_t m2 = window * window;

    // rows: Re of the four frequencies, then Im of the four
    const double freq[4][2] = {{a, 0.0}, {0.0, a}, {a, a}, {a, -a}};
    std::vector<double> w(8 * m2);
    std::size_t k = 0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx, ++k)
            for (int q = 0; q < 4; ++q) {
                const double phase = -two_pi * (freq[q][0] * dx + freq[q][1] * dy);
                w[static_cast<std::size_t>(q) * m2 + k] = std::cos(phase);
                w[static_cast<std::size_t>(q + 4) * m2 + k] = std::sin(phase);
            }

    std::vector<double> sigma(m2 * m2);
    k = 0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx, ++k) {
            std::size_t l = 0;
            for (int ey = -r; ey <= r; ++ey)
                for (int ex = -r; ex <= r; ++ex, ++l)
                    sigma[k * m2 + l] = std::pow(0.9, std::hypot(dx - ex, dy - ey));
        }

    // d = w * sigma * w^T, 8x8
    std::vector<double> ws(8 * m2, 0.0);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t kk = 0; kk < m2; ++kk) {
            const double wv = w[i * m2 + kk];
            for (std::size_t l = 0; l < m2; ++l) ws[i * m2 + l] += wv * sigma[kk * m2 + l];
        }
    std::vector<double> d(64, 0.0);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < m2; ++l) acc += ws[i * m2 + l] * w[j * m2 + l];
            d[i * 8 + j] = acc;
        }

    std::vector<double> values, vectors;
    jacobi_eigen(d, 8, values, vectors);
    std::array<std::array<double, 8>, 8> basis{};
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) basis[i][j] = vectors[i * 8 + j];
    return basis;
}

}  // namespace detail

// Local phase quantization: per pixel, the local STFT over the window is
// evaluated at the four lowest non-zero frequencies, the signs of the four
// real and four imaginary parts form an 8-bit code, and the codes are
// histogrammed. Returns 256 bins normalized to sum 1.
inline std::vector<double> lpq_descriptor(const GrayImage& img, const LpqConfig& cfg = {}) {
    const std::size_t m = cfg.window;
    if (m < 3 || m % 2 == 0) throw std::invalid_argument("lpq: window must be odd and >= 3");
    if (img.width < m || img.height < m) throw std::invalid_argument("lpq: image smaller than the window");

    const int r = static_cast<int>(m - 1) / 2;
    const double a = 1.0 / static_cast<double>(m);
    const double two_pi = 6.283185307179586476925286766559;
    std::vector<double> cos_a(m), sin_a(m);
    for (int t = -r; t <= r; ++t) {
        cos_a[static_cast<std::size_t>(t + r)] = std::cos(-two_pi * a * t);
        sin_a[static_cast<std::size_t>(t + r)] = std::sin(-two_pi * a * t);
    }

    const std::size_t w = img.width, h = img.height;
    const std::size_t vw = w - 2 * static_cast<std::size_t>(r);  // valid columns
    // horizontal pass: plain sum and complex sum at frequency a, per row
    std::vector<double> row_sum(h * vw), row_cr(h * vw), row_ci(h * vw);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < vw; ++x) {
            double s = 0.0, cr = 0.0, ci = 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                const double v = img.at(y, x + t);
                s += v;
                cr += v * cos_a[t];
                ci += v * sin_a[t];
            }
            row_sum[y * vw + x] = s;
            row_cr[y * vw + x] = cr;
            row_ci[y * vw + x] = ci;
        }

    std::array<std::array<double, 8>, 8> basis{};
    if (cfg.whiten) basis = detail::lpq_whitening_basis(m);

    std::vector<double> hist(256, 0.0);
    const std::size_t vh = h - 2 * static_cast<std::size_t>(r);
    for (std::size_t y = 0; y < vh; ++y)
        for (std::size_t x = 0; x < vw; ++x) {
            double f[8] = {0, 0, 0, 0, 0, 0, 0, 0};  // re f1..f4, im f1..f4
            for (std::size_t t = 0; t < m; ++t) {
                const std::size_t idx = (y + t) * vw + x;
                const double s = row_sum[idx], cr = row_cr[idx], ci = row_ci[idx];
                const double wc = cos_a[t], ws = sin_a[t];
                f[0] += cr;                 // (a, 0)
                f[4] += ci;
                f[1] += s * wc;             // (0, a)
                f[5] += s * ws;
                f[2] += cr * wc - ci * ws;  // (a, a)
                f[6] += cr * ws + ci * wc;
                f[3] += cr * wc + ci * ws;  // (a, -a): conjugate vertical weight
                f[7] += -cr * ws + ci * wc;
            }
            for (double& v : f)
                if (std::abs(v) < detail::lpq_dead_zone) v = 0.0;
            if (cfg.whiten) {
                double g[8];
                for (int i = 0; i < 8; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < 8; ++j) acc += basis[j][i] * f[j];  // v^T f
                    g[i] = std::abs(acc) < detail::lpq_dead_zone ? 0.0 : acc;
                }
                for (int i = 0; i < 8; ++i) f[i] = g[i];
            }
            unsigned code = 0;
            for (int i = 0; i < 8; ++i)
                if (f[i] >= 0.0) code |= 1u << i;
            hist[code] += 1.0;
        }

    const double total = static_cast<double>(vw * vh);
    for (double& v : hist) v /= total;
    return hist;
}

// Overlap of two normalized histograms in [0, 1].
inline double histogram_intersection(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("histogram intersection: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::min(a[i], b[i]);
    return acc;
}

}  // namespace tcnn
