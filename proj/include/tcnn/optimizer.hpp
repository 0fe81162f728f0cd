#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcnn/tensor.hpp"

namespace tcnn {

enum class OptimizerKind { sgd_momentum, adam };

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "sgd" || s == "sgd_momentum") return OptimizerKind::sgd_momentum;
    if (s == "adam") return OptimizerKind::adam;
    throw std::invalid_argument("unknown optimizer: " + s);
}

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double momentum = 0.9;       // sgd_momentum
    double beta1 = 0.9;          // adam
    double beta2 = 0.999;        // adam
    double epsilon = 1e-8;       // adam
};

// Per-parameter accumulators. `first` holds the momentum/first-moment buffer,
// `second` the adam second moments (unused for sgd). Shapes mirror the
// parameter list exactly.
template <typename T>
struct OptimizerState {
    std::vector<Tensor<T>> first;
    std::vector<Tensor<T>> second;
    std::uint64_t step = 0;
};

template <typename T>
OptimizerState<T> make_optimizer_state(const std::vector<Tensor<T>*>& params) {
    OptimizerState<T> st;
    for (const Tensor<T>* p : params) {
        st.first.emplace_back(p->shape);
        st.second.emplace_back(p->shape);
    }
    return st;
}

// One update over the full parameter list. Update rules:
//   sgd_momentum:  v <- mu*v - lr*g        p <- p + v
//   adam:          m <- b1*m + (1-b1)*g    v <- b2*v + (1-b2)*g^2
//                  p <- p - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
// Any non-finite gradient refuses the whole step and leaves every parameter
// and accumulator untouched.
template <typename T>
void optimizer_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
                    OptimizerState<T>& state, const OptimizerConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.first.size())
        throw std::invalid_argument("optimizer_step: parameter/gradient/state counts disagree");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->shape != grads[i]->shape || params[i]->shape != state.first[i].shape)
            throw std::invalid_argument("optimizer_step: shape mismatch at parameter " + std::to_string(i));
        for (const T g : grads[i]->data)
            if (!std::isfinite(static_cast<double>(g)))
                throw std::runtime_error("optimizer_step: non-finite gradient in parameter " + std::to_string(i) +
                                         "; step refused");
    }

    state.step += 1;
    if (cfg.kind == OptimizerKind::sgd_momentum) {
        const T mu = static_cast<T>(cfg.momentum);
        const T lr = static_cast<T>(cfg.learning_rate);
        for (std::size_t i = 0; i < params.size(); ++i) {
            T* p = params[i]->data.data();
            const T* g = grads[i]->data.data();
            T* v = state.first[i].data.data();
            const std::size_t len = params[i]->size();
            for (std::size_t j = 0; j < len; ++j) {
                v[j] = mu * v[j] - lr * g[j];
                p[j] += v[j];
            }
        }
    } else {
        const double b1 = cfg.beta1, b2 = cfg.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
        for (std::size_t i = 0; i < params.size(); ++i) {
            T* p = params[i]->data.data();
            const T* g = grads[i]->data.data();
            T* m = state.first[i].data.data();
            T* v = state.second[i].data.data();
            const std::size_t len = params[i]->size();
            for (std::size_t j = 0; j < len; ++j) {
                const double gd = static_cast<double>(g[j]);
                const double md = b1 * static_cast<double>(m[j]) + (1.0 - b1) * gd;
                const double vd = b2 * static_cast<double>(v[j]) + (1.0 - b2) * gd * gd;
                m[j] = static_cast<T>(md);
                v[j] = static_cast<T>(vd);
                p[j] -= static_cast<T>(cfg.learning_rate * (md / c1) / (std::sqrt(vd / c2) + cfg.epsilon));
            }
        }
    }
}

}  // namespace tcnn
