#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tcnn/features.hpp"

namespace tcnn {

struct LinearTrainConfig {
    std::size_t epochs = 400;
    double learning_rate = 0.05;
    double l2 = 1e-4;
};

// Multinomial logistic regression over standardized features, fitted with
// full-batch gradient descent. The objective is smooth and convex, so with
// the default step size the recorded loss decreases every epoch.
struct LinearModel {
    std::size_t classes = 0;
    std::vector<double> weights;  // [classes][dims]
    std::vector<double> bias;     // [classes]
    std::vector<double> mean;     // per-dim standardization, from the training set
    std::vector<double> stddev;
};

struct LinearTrainResult {
    LinearModel model;
    std::vector<double> loss_history;  // one entry per epoch, pre-update
};

namespace detail {

inline std::vector<double> standardize_row(const LinearModel& m, const std::vector<double>& x) {
    if (x.size() != m.mean.size()) throw std::invalid_argument("linear classifier: feature width mismatch");
    std::vector<double> z(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) z[d] = (x[d] - m.mean[d]) / m.stddev[d];
    return z;
}

inline std::vector<double> class_scores(const LinearModel& m, const std::vector<double>& z) {
    std::vector<double> s(m.classes);
    for (std::size_t k = 0; k < m.classes; ++k) {
        double acc = m.bias[k];
        const double* w = m.weights.data() + k * z.size();
        for (std::size_t d = 0; d < z.size(); ++d) acc += w[d] * z[d];
        s[k] = acc;
    }
    return s;
}

}  // namespace detail

inline LinearTrainResult train_linear(const std::vector<FeatureVector>& features,
                                      const std::vector<std::size_t>& labels, std::size_t classes,
                                      const LinearTrainConfig& cfg = {}) {
    if (features.empty()) throw std::invalid_argument("linear classifier: empty training set");
    if (features.size() != labels.size())
        throw std::invalid_argument("linear classifier: feature/label count mismatch");
    if (classes < 2) throw std::invalid_argument("linear classifier: need at least two classes");
    const std::size_t n = features.size(), dims = features[0].values.size();
    std::vector<std::size_t> per_class(classes, 0);
    for (std::size_t label : labels) {
        if (label >= classes) throw std::invalid_argument("linear classifier: label out of range");
        ++per_class[label];
    }
    for (std::size_t k = 0; k < classes; ++k)
        if (per_class[k] == 0) throw std::invalid_argument("linear classifier: class missing from training set");

    LinearTrainResult result;
    LinearModel& m = result.model;
    m.classes = classes;
    m.weights.assign(classes * dims, 0.0);
    m.bias.assign(classes, 0.0);
    m.mean.assign(dims, 0.0);
    m.stddev.assign(dims, 0.0);
    for (const auto& f : features) {
        if (f.values.size() != dims) throw std::invalid_argument("linear classifier: ragged features");
        for (std::size_t d = 0; d < dims; ++d) m.mean[d] += f.values[d];
    }
    for (double& v : m.mean) v /= static_cast<double>(n);
    for (const auto& f : features)
        for (std::size_t d = 0; d < dims; ++d) {
            const double c = f.values[d] - m.mean[d];
            m.stddev[d] += c * c;
        }
    for (double& v : m.stddev) {
        v = std::sqrt(v / static_cast<double>(n));
        if (v < 1e-12) v = 1.0;  // constant feature: leave it centered at zero
    }

    std::vector<std::vector<double>> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = detail::standardize_row(m, features[i].values);

    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> grad_w(classes * dims), grad_b(classes), probs(classes);
    result.loss_history.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto scores = detail::class_scores(m, z[i]);
            double peak = scores[0];
            for (double s : scores) peak = std::max(peak, s);
            double denom = 0.0;
            for (std::size_t k = 0; k < classes; ++k) {
                probs[k] = std::exp(scores[k] - peak);
                denom += probs[k];
            }
            for (double& p : probs) p /= denom;
            loss -= std::log(std::max(probs[labels[i]], 1e-300)) * inv_n;
            for (std::size_t k = 0; k < classes; ++k) {
                const double delta = (probs[k] - (k == labels[i] ? 1.0 : 0.0)) * inv_n;
                grad_b[k] += delta;
                double* gw = grad_w.data() + k * dims;
                const double* zi = z[i].data();
                for (std::size_t d = 0; d < dims; ++d) gw[d] += delta * zi[d];
            }
        }
        double penalty = 0.0;
        for (double w : m.weights) penalty += w * w;
        loss += 0.5 * cfg.l2 * penalty;
        result.loss_history.push_back(loss);
        for (std::size_t j = 0; j < m.weights.size(); ++j)
            m.weights[j] -= cfg.learning_rate * (grad_w[j] + cfg.l2 * m.weights[j]);
        for (std::size_t k = 0; k < classes; ++k) m.bias[k] -= cfg.learning_rate * grad_b[k];
    }
    return result;
}

// Highest score wins; exact ties resolve to the lowest class index, so the
// zero-iterations model predicts class 0 everywhere.
inline std::size_t predict_linear(const LinearModel& m, const FeatureVector& f) {
    if (m.classes == 0) throw std::invalid_argument("linear classifier: model is empty");
    const auto scores = detail::class_scores(m, detail::standardize_row(m, f.values));
    std::size_t best = 0;
    for (std::size_t k = 1; k < m.classes; ++k)
        if (scores[k] > scores[best]) best = k;
    return best;
}

}  // namespace tcnn
