#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "tcnn/rng.hpp"
#include "tcnn/tensor.hpp"

namespace tcnn {

// Central-difference gradient verification. The objective is the random
// projection L = sum(P .* forward()), so a single backward pass against P
// yields the analytic gradient of a scalar. Works on double tensors only;
// float rounding would drown the differences.
//
// forward:  () -> Tensor<double>, evaluated at the current value of *points
// backward: (const Tensor<double>& projection) -> std::vector<Tensor<double>>,
//           analytic gradients of L, one per entry of `points`
//
// Returns the max over all coordinates of |a - n| / max(|a|, |n|, 1).
template <typename ForwardFn, typename BackwardFn>
double grad_check(const std::vector<Tensor<double>*>& points, ForwardFn&& forward, BackwardFn&& backward, Rng& rng,
                  double epsilon = 1e-5) {
    Tensor<double> probe = forward();
    Tensor<double> projection(probe.shape);
    for (auto& v : projection.data) v = rng.uniform(-1.0, 1.0);

    const auto objective = [&]() {
        const Tensor<double> out = forward();
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += projection.data[i] * out.data[i];
        return acc;
    };

    const std::vector<Tensor<double>> analytic = backward(projection);
    if (analytic.size() != points.size())
        throw std::invalid_argument("grad_check: backward must return one gradient per checked tensor");

    double worst = 0.0;
    for (std::size_t t = 0; t < points.size(); ++t) {
        Tensor<double>& x = *points[t];
        if (analytic[t].shape != x.shape) throw std::invalid_argument("grad_check: gradient shape mismatch");
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double saved = x.data[i];
            x.data[i] = saved + epsilon;
            const double up = objective();
            x.data[i] = saved - epsilon;
            const double down = objective();
            x.data[i] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double a = analytic[t].data[i];
            const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1.0});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace tcnn
