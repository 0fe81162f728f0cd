#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tcnn/image.hpp"
#include "tcnn/tensor.hpp"

namespace tcnn {

// Stacks equally-sized grayscale patches into an [N,1,H,W] batch. Pixels are
// already unit-interval, so this is layout conversion only.
template <typename T>
Tensor<T> to_tensor(const std::vector<GrayImage>& patches) {
    if (patches.empty()) throw std::invalid_argument("to_tensor: no patches");
    const std::size_t h = patches.front().height, w = patches.front().width;
    Tensor<T> out({patches.size(), 1, h, w});
    std::size_t i = 0;
    for (const GrayImage& p : patches) {
        if (p.height != h || p.width != w) throw std::invalid_argument("to_tensor: mixed patch extents");
        for (float v : p.pixels) out.data[i++] = static_cast<T>(v);
    }
    return out;
}

// Scalar affine normalization, fitted on the training split only and carried
// with the weights so inference applies the very same transform.
struct Standardizer {
    double mean = 0.0;
    double stddev = 1.0;

    template <typename T>
    static Standardizer fit(const Tensor<T>& batch) {
        if (batch.size() == 0) throw std::invalid_argument("standardizer: empty input");
        double sum = 0.0;
        for (const T v : batch.data) sum += static_cast<double>(v);
        const double mean = sum / static_cast<double>(batch.size());
        double sq = 0.0;
        for (const T v : batch.data) {
            const double d = static_cast<double>(v) - mean;
            sq += d * d;
        }
        Standardizer s;
        s.mean = mean;
        s.stddev = std::sqrt(sq / static_cast<double>(batch.size()));
        if (s.stddev < 1e-12) s.stddev = 1.0;  // constant input: shift only
        return s;
    }

    template <typename T>
    void apply(Tensor<T>& batch) const {
        const T m = static_cast<T>(mean), inv = static_cast<T>(1.0 / stddev);
        for (T& v : batch.data) v = (v - m) * inv;
    }

    template <typename T>
    void invert(Tensor<T>& batch) const {
        const T m = static_cast<T>(mean), sd = static_cast<T>(stddev);
        for (T& v : batch.data) v = v * sd + m;
    }
};

}  // namespace tcnn
