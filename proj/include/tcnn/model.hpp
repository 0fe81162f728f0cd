#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcnn/arch.hpp"
#include "tcnn/layers.hpp"
#include "tcnn/optimizer.hpp"
#include "tcnn/rng.hpp"
#include "tcnn/tensor.hpp"

namespace tcnn {

template <typename T>
struct Model {
    ArchConfig config;
    std::uint64_t init_seed = 0;

    Tensor<T> conv1_kernels, conv1_bias;
    Tensor<T> conv2_kernels, conv2_bias;
    Tensor<T> dense1_weights, dense1_bias;
    Tensor<T> dense2_weights, dense2_bias;
    Tensor<T> output_weights, output_bias;

    std::vector<Tensor<T>*> parameters() {
        return {&conv1_kernels, &conv1_bias, &conv2_kernels, &conv2_bias, &dense1_weights,
                &dense1_bias,   &dense2_weights, &dense2_bias, &output_weights, &output_bias};
    }
    std::vector<const Tensor<T>*> parameters() const {
        return {&conv1_kernels, &conv1_bias, &conv2_kernels, &conv2_bias, &dense1_weights,
                &dense1_bias,   &dense2_weights, &dense2_bias, &output_weights, &output_bias};
    }

    static const std::vector<std::string>& parameter_names() {
        static const std::vector<std::string> names = {
            "conv1.kernels", "conv1.bias", "conv2.kernels", "conv2.bias", "dense1.weights",
            "dense1.bias",   "dense2.weights", "dense2.bias", "output.weights", "output.bias"};
        return names;
    }
};

namespace detail {
template <typename T>
void fill_fan_in_uniform(Tensor<T>& t, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(-bound, bound));
}
}  // namespace detail

// Allocates every parameter tensor at its configured shape, all zeros.
template <typename T>
Model<T> model_shell(const ArchConfig& cfg) {
    derive_shapes(cfg);  // throws on an inconsistent chain
    Model<T> m;
    m.config = cfg;
    m.conv1_kernels = Tensor<T>({cfg.conv1_filters, cfg.input_channels, cfg.conv1_kernel, cfg.conv1_kernel});
    m.conv1_bias = Tensor<T>({cfg.conv1_filters});
    m.conv2_kernels = Tensor<T>({cfg.conv2_filters, cfg.conv1_filters, cfg.conv2_kernel, cfg.conv2_kernel});
    m.conv2_bias = Tensor<T>({cfg.conv2_filters});
    const std::size_t fw = cfg.conv2_filters + cfg.conv1_filters;
    m.dense1_weights = Tensor<T>({fw, cfg.dense1_width});
    m.dense1_bias = Tensor<T>({cfg.dense1_width});
    m.dense2_weights = Tensor<T>({cfg.dense1_width, cfg.dense2_width});
    m.dense2_bias = Tensor<T>({cfg.dense2_width});
    m.output_weights = Tensor<T>({cfg.dense2_width, cfg.classes});
    m.output_bias = Tensor<T>({cfg.classes});
    return m;
}

// Weights: fan-in-scaled uniform U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
// Biases: zero. The draw order is fixed (layer order, row-major), so one seed
// always yields one parameter set.
template <typename T>
Model<T> build_model(const ArchConfig& cfg, std::uint64_t seed) {
    Model<T> m = model_shell<T>(cfg);
    m.init_seed = seed;
    Rng rng(mix_seed(seed, 1));
    detail::fill_fan_in_uniform(m.conv1_kernels, cfg.input_channels * cfg.conv1_kernel * cfg.conv1_kernel, rng);
    detail::fill_fan_in_uniform(m.conv2_kernels, cfg.conv1_filters * cfg.conv2_kernel * cfg.conv2_kernel, rng);
    const std::size_t fw = cfg.conv2_filters + cfg.conv1_filters;
    detail::fill_fan_in_uniform(m.dense1_weights, fw, rng);
    detail::fill_fan_in_uniform(m.dense2_weights, cfg.dense1_width, rng);
    detail::fill_fan_in_uniform(m.output_weights, cfg.dense2_width, rng);
    return m;
}

template <typename T>
std::size_t count_params(const Model<T>& m) {
    std::size_t total = 0;
    for (const Tensor<T>* p : m.parameters()) total += p->size();
    return total;
}

// Feature maps captured during one forward pass, post-rectifier.
template <typename T>
struct ActivationBundle {
    Tensor<T> conv1;    // [N,F1,h1,h1]
    Tensor<T> conv2;    // [N,F2,h2,h2]
    Tensor<T> energy;   // [N, F2+F1]
    Tensor<T> dense1;   // [N, D1]
    Tensor<T> dense2;   // [N, D2]
    Tensor<T> logits;   // [N, classes]
};

namespace detail {

// Global max over the rectified conv1 maps; gradient routes to the first
// row-major argmax when the max is positive, nowhere otherwise.
template <typename T>
struct GlobalMaxCache {
    std::vector<std::size_t> input_shape;
    std::vector<std::uint32_t> argmax;
    std::vector<std::uint8_t> positive;
};

template <typename T>
std::pair<Tensor<T>, GlobalMaxCache<T>> global_max_forward(const Tensor<T>& input) {
    const std::size_t n = input.shape[0], c = input.shape[1], area = input.shape[2] * input.shape[3];
    Tensor<T> out({n, c});
    GlobalMaxCache<T> cache;
    cache.input_shape = input.shape;
    cache.argmax.resize(n * c);
    cache.positive.resize(n * c);
    for (std::size_t nc = 0; nc < n * c; ++nc) {
        const T* in = input.data.data() + nc * area;
        T best = in[0];
        std::uint32_t pos = 0;
        for (std::size_t p = 1; p < area; ++p)
            if (in[p] > best) {
                best = in[p];
                pos = static_cast<std::uint32_t>(p);
            }
        cache.positive[nc] = best > T(0) ? 1 : 0;
        cache.argmax[nc] = pos;
        out.data[nc] = best > T(0) ? best : T(0);
    }
    return {std::move(out), std::move(cache)};
}

template <typename T>
Tensor<T> global_max_backward(const GlobalMaxCache<T>& cache, const Tensor<T>& grad_out) {
    Tensor<T> g(cache.input_shape);
    const std::size_t area = cache.input_shape[2] * cache.input_shape[3];
    for (std::size_t nc = 0; nc < grad_out.size(); ++nc)
        if (cache.positive[nc]) g.data[nc * area + cache.argmax[nc]] += grad_out.data[nc];
    return g;
}

}  // namespace detail

template <typename T>
struct ForwardTrace {
    Tensor<T> logits;
    // caches for the backward pass
    Conv2dCache<T> conv1;
    ReluCache relu1;
    MaxPoolCache<T> pool1;
    Conv2dCache<T> conv2;
    EnergyPoolCache<T> energy2;
    EnergyPoolCache<T> energy1;
    detail::GlobalMaxCache<T> gmax1;
    ConcatCache concat;
    DenseCache<T> dense1;
    ReluCache relu_h1;
    DenseCache<T> dense2;
    ReluCache relu_h2;
    DenseCache<T> dense3;
};

// Full forward pass. Asserts the configured shape chain on every call (the
// layer kernels throw on any mismatch). When `capture` is non-null the
// post-rectifier maps are copied out for inspection/export.
template <typename T>
ForwardTrace<T> forward_trace(const Model<T>& m, const Tensor<T>& batch, ActivationBundle<T>* capture = nullptr) {
    const ArchConfig& cfg = m.config;
    require_shape(batch, {batch.shape[0], cfg.input_channels, cfg.input_size, cfg.input_size}, "model forward");

    ForwardTrace<T> t;
    auto c1 = conv2d_forward(batch, m.conv1_kernels, m.conv1_bias, cfg.conv1_stride);
    t.conv1 = std::move(c1.cache);
    auto r1 = relu_forward(c1.output);
    t.relu1 = std::move(r1.cache);
    auto p1 = maxpool2d_forward(r1.output, cfg.pool_window, cfg.pool_stride);
    t.pool1 = std::move(p1.cache);
    auto c2 = conv2d_forward(p1.output, m.conv2_kernels, m.conv2_bias, cfg.conv2_stride);
    t.conv2 = std::move(c2.cache);

    // Texture vector: 64 mean rectified energies from conv2, then the 32-wide
    // conv1 branch (energy by default, global max optionally).
    auto e2 = energy_pool_forward(c2.output);
    t.energy2 = std::move(e2.cache);
    Tensor<T> branch;
    if (cfg.conv1_branch == Conv1Branch::energy) {
        auto e1 = energy_pool_forward(c1.output);
        t.energy1 = std::move(e1.cache);
        branch = std::move(e1.output);
    } else {
        auto g1 = detail::global_max_forward(c1.output);
        t.gmax1 = std::move(g1.second);
        branch = std::move(g1.first);
    }
    auto cat = concat_forward<T>({e2.output, branch});
    t.concat = std::move(cat.cache);

    auto d1 = dense_forward(cat.output, m.dense1_weights, m.dense1_bias);
    t.dense1 = std::move(d1.cache);
    auto h1 = relu_forward(d1.output);
    t.relu_h1 = std::move(h1.cache);
    auto d2 = dense_forward(h1.output, m.dense2_weights, m.dense2_bias);
    t.dense2 = std::move(d2.cache);
    auto h2 = relu_forward(d2.output);
    t.relu_h2 = std::move(h2.cache);
    auto d3 = dense_forward(h2.output, m.output_weights, m.output_bias);
    t.dense3 = std::move(d3.cache);
    t.logits = std::move(d3.output);

    if (capture) {
        capture->conv1 = r1.output;
        capture->conv2 = relu_forward(c2.output).output;
        capture->energy = cat.output;
        capture->dense1 = h1.output;
        capture->dense2 = h2.output;
        capture->logits = t.logits;
    }
    return t;
}

template <typename T>
Tensor<T> forward(const Model<T>& m, const Tensor<T>& batch, ActivationBundle<T>* capture = nullptr) {
    return forward_trace(m, batch, capture).logits;
}

template <typename T>
struct ModelGrads {
    Tensor<T> conv1_kernels, conv1_bias;
    Tensor<T> conv2_kernels, conv2_bias;
    Tensor<T> dense1_weights, dense1_bias;
    Tensor<T> dense2_weights, dense2_bias;
    Tensor<T> output_weights, output_bias;

    std::vector<const Tensor<T>*> list() const {
        return {&conv1_kernels, &conv1_bias, &conv2_kernels, &conv2_bias, &dense1_weights,
                &dense1_bias,   &dense2_weights, &dense2_bias, &output_weights, &output_bias};
    }
};

// Backward through the whole graph given d(loss)/d(logits). The concatenation
// gradient splits into both convolution paths; conv1 receives the sum of the
// pooling-path and branch-path gradients.
template <typename T>
ModelGrads<T> backward_trace(const Model<T>& m, ForwardTrace<T>& t, const Tensor<T>& grad_logits) {
    ModelGrads<T> g;
    auto d3 = dense_backward(t.dense3, m.output_weights, grad_logits);
    g.output_weights = std::move(d3.weights);
    g.output_bias = std::move(d3.bias);
    auto dh2 = relu_backward(t.relu_h2, d3.input);
    auto d2 = dense_backward(t.dense2, m.dense2_weights, dh2);
    g.dense2_weights = std::move(d2.weights);
    g.dense2_bias = std::move(d2.bias);
    auto dh1 = relu_backward(t.relu_h1, d2.input);
    auto d1 = dense_backward(t.dense1, m.dense1_weights, dh1);
    g.dense1_weights = std::move(d1.weights);
    g.dense1_bias = std::move(d1.bias);

    auto parts = concat_backward(t.concat, d1.input);
    auto da2 = energy_pool_backward(t.energy2, parts[0]);
    auto c2 = conv2d_backward(t.conv2, m.conv2_kernels, da2, true);
    g.conv2_kernels = std::move(c2.kernels);
    g.conv2_bias = std::move(c2.bias);

    auto dp1 = maxpool2d_backward(t.pool1, c2.input);
    auto da1 = relu_backward(t.relu1, dp1);
    Tensor<T> branch_grad = (m.config.conv1_branch == Conv1Branch::energy)
                                ? energy_pool_backward(t.energy1, parts[1])
                                : detail::global_max_backward(t.gmax1, parts[1]);
    for (std::size_t i = 0; i < da1.size(); ++i) da1.data[i] += branch_grad.data[i];

    auto c1 = conv2d_backward(t.conv1, m.conv1_kernels, da1, false);
    g.conv1_kernels = std::move(c1.kernels);
    g.conv1_bias = std::move(c1.bias);
    return g;
}

// One optimization step on one batch. Returns the batch loss. A non-finite
// loss or gradient aborts before any parameter changes.
template <typename T>
T train_step(Model<T>& m, const Tensor<T>& batch, const std::vector<int>& targets, OptimizerState<T>& state,
             const OptimizerConfig& opt) {
    if (batch.shape[0] != targets.size())
        throw std::invalid_argument("train_step: batch and target lengths disagree");
    ForwardTrace<T> trace = forward_trace(m, batch);
    auto sm = softmax_xent(trace.logits, targets);
    if (!std::isfinite(static_cast<double>(sm.loss)))
        throw std::runtime_error("train_step: non-finite loss; step aborted");
    ModelGrads<T> grads = backward_trace(m, trace, sm.grad_logits);
    optimizer_step(m.parameters(), grads.list(), state, opt);
    return sm.loss;
}

}  // namespace tcnn
