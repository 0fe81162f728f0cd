#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tcnn/parallel.hpp"
#include "tcnn/tensor.hpp"

namespace tcnn {

// ---------------------------------------------------------------------------
// Small matrix kernels. Both keep a fixed per-element accumulation order, so
// results do not depend on the worker count.
// ---------------------------------------------------------------------------

// C[M x N] (+)= A[M x K] * B[K x N], all row-major. The j loop vectorizes
// without reassociating any single C element.
template <typename T>
void gemm_rrr(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate)
        for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T av = arow[kk];
            const T* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// Blocked dot product with eight independent lanes combined in a fixed order.
template <typename T>
T dot_blocked(const T* a, const T* b, std::size_t n) {
    T lane[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (std::size_t l = 0; l < 8; ++l) lane[l] += a[i + l] * b[i + l];
    for (; i < n; ++i) lane[i % 8] += a[i] * b[i];
    return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7]));
}

// ---------------------------------------------------------------------------
// conv2d: valid (no padding) convolution via im2col + matrix products.
// ---------------------------------------------------------------------------

template <typename T>
struct Conv2dCache {
    std::vector<std::size_t> input_shape;   // [N,Cin,H,W]
    std::vector<std::size_t> kernel_shape;  // [Cout,Cin,Kh,Kw]
    std::size_t stride = 1;
    std::size_t out_h = 0, out_w = 0;
    Tensor<T> cols;  // [N, Cin*Kh*Kw, outH*outW]
};

template <typename T>
struct Conv2dResult {
    Tensor<T> output;
    Conv2dCache<T> cache;
};

template <typename T>
struct Conv2dGrads {
    Tensor<T> input;    // empty unless requested
    Tensor<T> kernels;
    Tensor<T> bias;
};

template <typename T>
Conv2dResult<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias,
                               std::size_t stride) {
    if (input.rank() != 4 || kernels.rank() != 4)
        throw std::invalid_argument("conv2d: input and kernels must be rank-4");
    const std::size_t n = input.shape[0], cin = input.shape[1], h = input.shape[2], w = input.shape[3];
    const std::size_t cout = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3];
    if (kernels.shape[1] != cin)
        throw std::invalid_argument("conv2d: kernel channel count does not match input channels");
    if (bias.rank() != 1 || bias.shape[0] != cout)
        throw std::invalid_argument("conv2d: bias length must equal kernel count");
    if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
    if (h < kh || w < kw) throw std::invalid_argument("conv2d: kernel larger than input");
    const std::size_t oh = (h - kh) / stride + 1;
    const std::size_t ow = (w - kw) / stride + 1;

    const std::size_t taps = cin * kh * kw;  // rows of the col matrix
    const std::size_t positions = oh * ow;

    Conv2dResult<T> res;
    res.output = Tensor<T>({n, cout, oh, ow});
    res.cache.input_shape = input.shape;
    res.cache.kernel_shape = kernels.shape;
    res.cache.stride = stride;
    res.cache.out_h = oh;
    res.cache.out_w = ow;
    res.cache.cols = Tensor<T>({n, taps, positions});

    parallel_for(n, [&](std::size_t s) {
        T* cols = res.cache.cols.data.data() + s * taps * positions;
        const T* in = input.data.data() + s * cin * h * w;
        std::size_t k = 0;
        for (std::size_t ci = 0; ci < cin; ++ci) {
            for (std::size_t u = 0; u < kh; ++u) {
                for (std::size_t v = 0; v < kw; ++v, ++k) {
                    T* crow = cols + k * positions;
                    for (std::size_t i = 0; i < oh; ++i) {
                        const T* src = in + ci * h * w + (i * stride + u) * w + v;
                        T* dst = crow + i * ow;
                        for (std::size_t j = 0; j < ow; ++j) dst[j] = src[j * stride];
                    }
                }
            }
        }
        T* out = res.output.data.data() + s * cout * positions;
        gemm_rrr(kernels.data.data(), cols, out, cout, taps, positions, false);
        for (std::size_t co = 0; co < cout; ++co) {
            const T bv = bias[co];
            T* orow = out + co * positions;
            for (std::size_t p = 0; p < positions; ++p) orow[p] += bv;
        }
    });
    return res;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const Conv2dCache<T>& cache, const Tensor<T>& kernels, const Tensor<T>& grad_out,
                               bool need_input_grad = true) {
    const auto& is = cache.input_shape;
    const std::size_t n = is[0], cin = is[1], h = is[2], w = is[3];
    const std::size_t cout = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3];
    const std::size_t oh = cache.out_h, ow = cache.out_w, stride = cache.stride;
    const std::size_t taps = cin * kh * kw, positions = oh * ow;
    require_shape(grad_out, {n, cout, oh, ow}, "conv2d backward");

    Conv2dGrads<T> g;
    g.kernels = Tensor<T>(kernels.shape);
    g.bias = Tensor<T>({cout});

    // Kernel and bias gradients: one worker owns one output channel, scanning
    // samples in ascending order.
    parallel_for(cout, [&](std::size_t co) {
        T* krow = g.kernels.data.data() + co * taps;
        T bacc = T(0);
        for (std::size_t s = 0; s < n; ++s) {
            const T* grow = grad_out.data.data() + (s * cout + co) * positions;
            const T* cols = cache.cols.data.data() + s * taps * positions;
            for (std::size_t k = 0; k < taps; ++k) krow[k] += dot_blocked(grow, cols + k * positions, positions);
            T lane[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
            std::size_t p = 0;
            for (; p + 8 <= positions; p += 8)
                for (std::size_t l = 0; l < 8; ++l) lane[l] += grow[p + l];
            for (; p < positions; ++p) lane[p % 8] += grow[p];
            bacc += ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7]));
        }
        g.bias[co] = bacc;
    });

    if (need_input_grad) {
        g.input = Tensor<T>(is);
        parallel_for(n, [&](std::size_t s) {
            std::vector<T> dcols(taps * positions, T(0));
            const T* grow = grad_out.data.data() + s * cout * positions;
            for (std::size_t co = 0; co < cout; ++co) {
                const T* krow = kernels.data.data() + co * taps;
                const T* gr = grow + co * positions;
                for (std::size_t k = 0; k < taps; ++k) {
                    const T kv = krow[k];
                    T* drow = dcols.data() + k * positions;
                    for (std::size_t p = 0; p < positions; ++p) drow[p] += kv * gr[p];
                }
            }
            // col2im scatter; windows overlap, so this stays sequential per sample.
            T* din = g.input.data.data() + s * cin * h * w;
            std::size_t k = 0;
            for (std::size_t ci = 0; ci < cin; ++ci) {
                for (std::size_t u = 0; u < kh; ++u) {
                    for (std::size_t v = 0; v < kw; ++v, ++k) {
                        const T* drow = dcols.data() + k * positions;
                        for (std::size_t i = 0; i < oh; ++i) {
                            T* dst = din + ci * h * w + (i * stride + u) * w + v;
                            const T* src = drow + i * ow;
                            for (std::size_t j = 0; j < ow; ++j) dst[j * stride] += src[j];
                        }
                    }
                }
            }
        });
    }
    return g;
}

// ---------------------------------------------------------------------------
// relu
// ---------------------------------------------------------------------------

struct ReluCache {
    std::vector<std::uint8_t> mask;  // 1 where input > 0
};

template <typename T>
struct ReluResult {
    Tensor<T> output;
    ReluCache cache;
};

template <typename T>
ReluResult<T> relu_forward(const Tensor<T>& input) {
    ReluResult<T> res;
    res.output = input;
    res.cache.mask.resize(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        const bool pos = input.data[i] > T(0);
        res.cache.mask[i] = pos ? 1 : 0;
        if (!pos) res.output.data[i] = T(0);
    }
    return res;
}

template <typename T>
Tensor<T> relu_backward(const ReluCache& cache, const Tensor<T>& grad_out) {
    if (cache.mask.size() != grad_out.size()) throw std::invalid_argument("relu backward: size mismatch");
    Tensor<T> g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!cache.mask[i]) g.data[i] = T(0);
    return g;
}

// ---------------------------------------------------------------------------
// maxpool2d: ties route to the first position in row-major scan order.
// ---------------------------------------------------------------------------

template <typename T>
struct MaxPoolCache {
    std::vector<std::size_t> input_shape;
    std::size_t window = 0, stride = 0, out_h = 0, out_w = 0;
    std::vector<std::uint32_t> argmax;  // flat h*W+w winner per output cell
};

template <typename T>
struct MaxPoolResult {
    Tensor<T> output;
    MaxPoolCache<T> cache;
};

template <typename T>
MaxPoolResult<T> maxpool2d_forward(const Tensor<T>& input, std::size_t window, std::size_t stride) {
    if (input.rank() != 4) throw std::invalid_argument("maxpool2d: input must be rank-4");
    const std::size_t n = input.shape[0], c = input.shape[1], h = input.shape[2], w = input.shape[3];
    if (window == 0 || stride == 0) throw std::invalid_argument("maxpool2d: window and stride must be positive");
    if (window > h || window > w) throw std::invalid_argument("maxpool2d: window exceeds input extent");
    const std::size_t oh = (h - window) / stride + 1;
    const std::size_t ow = (w - window) / stride + 1;

    MaxPoolResult<T> res;
    res.output = Tensor<T>({n, c, oh, ow});
    res.cache.input_shape = input.shape;
    res.cache.window = window;
    res.cache.stride = stride;
    res.cache.out_h = oh;
    res.cache.out_w = ow;
    res.cache.argmax.resize(n * c * oh * ow);

    parallel_for(n * c, [&](std::size_t nc) {
        const T* in = input.data.data() + nc * h * w;
        T* out = res.output.data.data() + nc * oh * ow;
        std::uint32_t* arg = res.cache.argmax.data() + nc * oh * ow;
        for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j) {
                T best = -std::numeric_limits<T>::infinity();
                std::uint32_t best_pos = 0;
                for (std::size_t u = 0; u < window; ++u) {
                    const std::size_t y = i * stride + u;
                    for (std::size_t v = 0; v < window; ++v) {
                        const std::size_t x = j * stride + v;
                        const T val = in[y * w + x];
                        if (val > best) {
                            best = val;
                            best_pos = static_cast<std::uint32_t>(y * w + x);
                        }
                    }
                }
                out[i * ow + j] = best;
                arg[i * ow + j] = best_pos;
            }
        }
    });
    return res;
}

template <typename T>
Tensor<T> maxpool2d_backward(const MaxPoolCache<T>& cache, const Tensor<T>& grad_out) {
    const auto& is = cache.input_shape;
    const std::size_t n = is[0], c = is[1], h = is[2], w = is[3];
    require_shape(grad_out, {n, c, cache.out_h, cache.out_w}, "maxpool2d backward");
    Tensor<T> g(is);
    const std::size_t cells = cache.out_h * cache.out_w;
    parallel_for(n * c, [&](std::size_t nc) {
        T* din = g.data.data() + nc * h * w;
        const T* gout = grad_out.data.data() + nc * cells;
        const std::uint32_t* arg = cache.argmax.data() + nc * cells;
        for (std::size_t p = 0; p < cells; ++p) din[arg[p]] += gout[p];
    });
    return g;
}

// ---------------------------------------------------------------------------
// energy_pool: per feature map, mean of the rectified activations. Backward
// treats the rectifier derivative at exactly 0 as 0.
// ---------------------------------------------------------------------------

template <typename T>
struct EnergyPoolCache {
    std::vector<std::size_t> input_shape;
    std::vector<std::uint8_t> mask;  // 1 where input > 0
};

template <typename T>
struct EnergyPoolResult {
    Tensor<T> output;  // [N,C]
    EnergyPoolCache<T> cache;
};

template <typename T>
EnergyPoolResult<T> energy_pool_forward(const Tensor<T>& input) {
    if (input.rank() != 4) throw std::invalid_argument("energy_pool: input must be rank-4");
    const std::size_t n = input.shape[0], c = input.shape[1], h = input.shape[2], w = input.shape[3];
    const std::size_t area = h * w;
    EnergyPoolResult<T> res;
    res.output = Tensor<T>({n, c});
    res.cache.input_shape = input.shape;
    res.cache.mask.resize(input.size());
    parallel_for(n * c, [&](std::size_t nc) {
        const T* in = input.data.data() + nc * area;
        std::uint8_t* m = res.cache.mask.data() + nc * area;
        T acc = T(0);
        for (std::size_t p = 0; p < area; ++p) {
            const bool pos = in[p] > T(0);
            m[p] = pos ? 1 : 0;
            if (pos) acc += in[p];
        }
        res.output.data[nc] = acc / static_cast<T>(area);
    });
    return res;
}

template <typename T>
Tensor<T> energy_pool_backward(const EnergyPoolCache<T>& cache, const Tensor<T>& grad_out) {
    const auto& is = cache.input_shape;
    const std::size_t n = is[0], c = is[1], area = is[2] * is[3];
    require_shape(grad_out, {n, c}, "energy_pool backward");
    Tensor<T> g(is);
    parallel_for(n * c, [&](std::size_t nc) {
        const T scale = grad_out.data[nc] / static_cast<T>(area);
        const std::uint8_t* m = cache.mask.data() + nc * area;
        T* din = g.data.data() + nc * area;
        for (std::size_t p = 0; p < area; ++p) din[p] = m[p] ? scale : T(0);
    });
    return g;
}

// ---------------------------------------------------------------------------
// dense: affine map x.W + b with weights stored [D x M].
// ---------------------------------------------------------------------------

template <typename T>
struct DenseCache {
    Tensor<T> input;  // [N,D]
};

template <typename T>
struct DenseResult {
    Tensor<T> output;
    DenseCache<T> cache;
};

template <typename T>
struct DenseGrads {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> bias;
};

template <typename T>
DenseResult<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
    if (input.rank() != 2 || weights.rank() != 2)
        throw std::invalid_argument("dense: input and weights must be rank-2");
    const std::size_t n = input.shape[0], d = input.shape[1];
    const std::size_t m = weights.shape[1];
    if (weights.shape[0] != d) throw std::invalid_argument("dense: inner dimensions disagree");
    if (bias.rank() != 1 || bias.shape[0] != m) throw std::invalid_argument("dense: bias length must equal width");

    DenseResult<T> res;
    res.output = Tensor<T>({n, m});
    res.cache.input = input;
    parallel_for(n, [&](std::size_t s) {
        T* orow = res.output.data.data() + s * m;
        for (std::size_t j = 0; j < m; ++j) orow[j] = bias[j];
        const T* xrow = input.data.data() + s * d;
        for (std::size_t k = 0; k < d; ++k) {
            const T xv = xrow[k];
            const T* wrow = weights.data.data() + k * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += xv * wrow[j];
        }
    });
    return res;
}

template <typename T>
DenseGrads<T> dense_backward(const DenseCache<T>& cache, const Tensor<T>& weights, const Tensor<T>& grad_out) {
    const std::size_t n = cache.input.shape[0], d = cache.input.shape[1], m = weights.shape[1];
    require_shape(grad_out, {n, m}, "dense backward");
    DenseGrads<T> g;
    g.input = Tensor<T>({n, d});
    g.weights = Tensor<T>({d, m});
    g.bias = Tensor<T>({m});

    parallel_for(n, [&](std::size_t s) {
        const T* grow = grad_out.data.data() + s * m;
        T* drow = g.input.data.data() + s * d;
        for (std::size_t k = 0; k < d; ++k) drow[k] = dot_blocked(grow, weights.data.data() + k * m, m);
    });
    parallel_for(d, [&](std::size_t k) {
        T* wrow = g.weights.data.data() + k * m;
        for (std::size_t s = 0; s < n; ++s) {
            const T xv = cache.input.data[s * d + k];
            const T* grow = grad_out.data.data() + s * m;
            for (std::size_t j = 0; j < m; ++j) wrow[j] += xv * grow[j];
        }
    });
    for (std::size_t s = 0; s < n; ++s) {
        const T* grow = grad_out.data.data() + s * m;
        for (std::size_t j = 0; j < m; ++j) g.bias[j] += grow[j];
    }
    return g;
}

// ---------------------------------------------------------------------------
// concat along the feature axis.
// ---------------------------------------------------------------------------

struct ConcatCache {
    std::vector<std::size_t> widths;
};

template <typename T>
struct ConcatResult {
    Tensor<T> output;
    ConcatCache cache;
};

template <typename T>
ConcatResult<T> concat_forward(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat: needs at least one part");
    const std::size_t n = parts.front().shape[0];
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.shape[0] != n) throw std::invalid_argument("concat: batch extents disagree");
        total += p.shape[1];
    }
    ConcatResult<T> res;
    res.output = Tensor<T>({n, total});
    for (const auto& p : parts) res.cache.widths.push_back(p.shape[1]);
    for (std::size_t s = 0; s < n; ++s) {
        T* dst = res.output.data.data() + s * total;
        for (const auto& p : parts) {
            const std::size_t w = p.shape[1];
            const T* src = p.data.data() + s * w;
            for (std::size_t j = 0; j < w; ++j) dst[j] = src[j];
            dst += w;
        }
    }
    return res;
}

template <typename T>
std::vector<Tensor<T>> concat_backward(const ConcatCache& cache, const Tensor<T>& grad_out) {
    std::size_t total = 0;
    for (std::size_t w : cache.widths) total += w;
    const std::size_t n = grad_out.shape[0];
    require_shape(grad_out, {n, total}, "concat backward");
    std::vector<Tensor<T>> grads;
    std::size_t offset = 0;
    for (std::size_t w : cache.widths) {
        Tensor<T> g({n, w});
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t j = 0; j < w; ++j) g.data[s * w + j] = grad_out.data[s * total + offset + j];
        grads.push_back(std::move(g));
        offset += w;
    }
    return grads;
}

// ---------------------------------------------------------------------------
// softmax + mean cross-entropy, fused so the logit gradient is exact.
// ---------------------------------------------------------------------------

template <typename T>
struct SoftmaxXentResult {
    Tensor<T> probabilities;  // [N,K]
    T loss = T(0);            // mean negative log-likelihood
    Tensor<T> grad_logits;    // (prob - onehot) / N
};

template <typename T>
SoftmaxXentResult<T> softmax_xent(const Tensor<T>& logits, const std::vector<int>& targets) {
    if (logits.rank() != 2) throw std::invalid_argument("softmax_xent: logits must be rank-2");
    const std::size_t n = logits.shape[0], k = logits.shape[1];
    if (k < 2) throw std::invalid_argument("softmax_xent: needs at least two classes");
    if (targets.size() != n) throw std::invalid_argument("softmax_xent: target count must equal batch extent");

    SoftmaxXentResult<T> res;
    res.probabilities = Tensor<T>({n, k});
    res.grad_logits = Tensor<T>({n, k});
    double loss = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const int t = targets[s];
        if (t < 0 || static_cast<std::size_t>(t) >= k)
            throw std::invalid_argument("softmax_xent: target index out of range");
        const T* row = logits.data.data() + s * k;
        T mx = row[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j] - mx));
        T* prow = res.probabilities.data.data() + s * k;
        T* grow = res.grad_logits.data.data() + s * k;
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::exp(static_cast<double>(row[j] - mx)) / denom;
            prow[j] = static_cast<T>(p);
            grow[j] = static_cast<T>((p - (static_cast<std::size_t>(t) == j ? 1.0 : 0.0)) / static_cast<double>(n));
        }
        loss += -std::log(std::max(static_cast<double>(prow[t]), 1e-300));
    }
    res.loss = static_cast<T>(loss / static_cast<double>(n));
    return res;
}

}  // namespace tcnn
