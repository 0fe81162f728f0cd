#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tcnn/manifest.hpp"

namespace tcnn {

// Confusion-matrix bookkeeping; rows are true classes, columns predictions.
struct Metrics {
    std::size_t classes = label_count;
    std::vector<std::size_t> confusion;

    explicit Metrics(std::size_t k = label_count) : classes(k), confusion(k * k, 0) {
        if (k == 0) throw std::invalid_argument("metrics: need at least one class");
    }

    void add(std::size_t truth, std::size_t predicted) {
        if (truth >= classes || predicted >= classes)
            throw std::invalid_argument("metrics: class index out of range");
        ++confusion[truth * classes + predicted];
    }

    std::size_t count(std::size_t truth, std::size_t predicted) const {
        return confusion[truth * classes + predicted];
    }

    std::size_t total() const {
        std::size_t n = 0;
        for (auto v : confusion) n += v;
        return n;
    }

    std::size_t row_total(std::size_t truth) const {
        std::size_t n = 0;
        for (std::size_t j = 0; j < classes; ++j) n += count(truth, j);
        return n;
    }

    double accuracy() const {
        const std::size_t n = total();
        if (n == 0) throw std::logic_error("metrics: no observations");
        std::size_t hits = 0;
        for (std::size_t k = 0; k < classes; ++k) hits += count(k, k);
        return static_cast<double>(hits) / static_cast<double>(n);
    }

    // 0/0 (an absent class or an unused prediction) reads as 0
    double recall(std::size_t k) const {
        const std::size_t n = row_total(k);
        return n == 0 ? 0.0 : static_cast<double>(count(k, k)) / static_cast<double>(n);
    }

    double precision(std::size_t k) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < classes; ++i) n += count(i, k);
        return n == 0 ? 0.0 : static_cast<double>(count(k, k)) / static_cast<double>(n);
    }
};

// Majority vote over per-patch predictions; ties resolve to the most severe
// class, which is the highest label index.
inline std::size_t majority_vote(const std::vector<std::size_t>& votes, std::size_t classes = label_count) {
    if (votes.empty()) throw std::invalid_argument("majority_vote: no votes");
    std::vector<std::size_t> counts(classes, 0);
    for (auto v : votes) {
        if (v >= classes) throw std::invalid_argument("majority_vote: class index out of range");
        ++counts[v];
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k)
        if (counts[k] >= counts[best]) best = k;
    return best;
}

}  // namespace tcnn
