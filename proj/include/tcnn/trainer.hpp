#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcnn/augment.hpp"
#include "tcnn/batch.hpp"
#include "tcnn/bicubic.hpp"
#include "tcnn/image_io.hpp"
#include "tcnn/manifest.hpp"
#include "tcnn/metrics.hpp"
#include "tcnn/model.hpp"
#include "tcnn/optimizer.hpp"
#include "tcnn/patches.hpp"
#include "tcnn/rng.hpp"
#include "tcnn/synth.hpp"

namespace tcnn {

struct TrainConfig {
    OptimizerConfig optimizer;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    bool augment_enabled = true;
    AugmentConfig augment;
    std::uint64_t seed = 0;
};

inline void validate(const TrainConfig& cfg) {
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch size must be at least 1");
    if (cfg.patience < 1) throw std::invalid_argument("train: patience must be at least 1");
    if (cfg.max_epochs < 1) throw std::invalid_argument("train: need at least one epoch");
    validate(cfg.augment);
}

// One patch ready for training: the pre-upscale crop plus its provenance.
struct PatchSample {
    GrayImage patch;
    std::size_t label = 0;
    std::string source_id;
    std::size_t patch_index = 0;
};

using SampleSet = std::vector<PatchSample>;

// Slice every source strip into its overlapping square patches.
inline SampleSet slice_sources(const std::vector<SourceImage>& corpus, std::size_t window = 94,
                               double overlap = 0.5) {
    SampleSet out;
    for (const auto& src : corpus) {
        auto set = slice_patches(src.image, window, overlap);
        for (std::size_t i = 0; i < set.patches.size(); ++i)
            out.push_back({std::move(set.patches[i]), static_cast<std::size_t>(src.label),
                           src.id, i});
    }
    return out;
}

inline DatasetManifest manifest_from_samples(const SampleSet& samples) {
    DatasetManifest manifest;
    manifest.reserve(samples.size());
    for (const auto& s : samples)
        manifest.push_back({"", static_cast<Label>(s.label), s.source_id, s.patch_index, ""});
    return manifest;
}

// Reorders/filters `samples` to match a manifest subset (e.g. one side of a
// split). Every record must resolve to exactly one sample.
inline SampleSet subset_samples(const SampleSet& samples, const DatasetManifest& subset) {
    std::map<std::pair<std::string, std::size_t>, const PatchSample*> index;
    for (const auto& s : samples) index[{s.source_id, s.patch_index}] = &s;
    SampleSet out;
    out.reserve(subset.size());
    for (const auto& rec : subset) {
        const auto it = index.find({rec.source_id, rec.patch_index});
        if (it == index.end())
            throw std::invalid_argument("subset: no sample for " + rec.source_id + " patch " +
                                        std::to_string(rec.patch_index));
        out.push_back(*it->second);
    }
    return out;
}

// Loads patch images named by a manifest, relative to the manifest directory.
inline SampleSet load_samples(const DatasetManifest& manifest, const std::string& base_dir) {
    namespace fs = std::filesystem;
    SampleSet out;
    out.reserve(manifest.size());
    for (const auto& rec : manifest) {
        fs::path p(rec.path);
        if (p.is_relative()) p = fs::path(base_dir) / p;
        out.push_back({read_image(p.string()), static_cast<std::size_t>(rec.label), rec.source_id,
                       rec.patch_index});
    }
    return out;
}

namespace detail {

template <typename T>
void fill_input(Tensor<T>& batch, std::size_t slot, const GrayImage& patch,
                std::size_t input_size, const Standardizer& st) {
    const GrayImage big = patch.width == input_size && patch.height == input_size
                              ? patch
                              : upscale_bicubic(patch, input_size);
    T* dst = batch.data.data() + slot * input_size * input_size;
    const T mean = static_cast<T>(st.mean), inv = static_cast<T>(1.0 / st.stddev);
    for (std::size_t i = 0; i < big.pixels.size(); ++i)
        dst[i] = (static_cast<T>(big.pixels[i]) - mean) * inv;
}

}  // namespace detail

// Mean and deviation of the training pixels after upscaling, computed once
// and applied to every split.
inline Standardizer fit_standardizer(const SampleSet& train, std::size_t input_size) {
    if (train.empty()) throw std::invalid_argument("standardizer: empty training set");
    double sum = 0.0, sq = 0.0, n = 0.0;
    for (const auto& s : train) {
        const GrayImage big = s.patch.width == input_size && s.patch.height == input_size
                                  ? s.patch
                                  : upscale_bicubic(s.patch, input_size);
        for (float v : big.pixels) sum += v;
        n += static_cast<double>(big.pixels.size());
    }
    const double mean = sum / n;
    for (const auto& s : train) {
        const GrayImage big = s.patch.width == input_size && s.patch.height == input_size
                                  ? s.patch
                                  : upscale_bicubic(s.patch, input_size);
        for (float v : big.pixels) sq += (v - mean) * (v - mean);
    }
    Standardizer st;
    st.mean = mean;
    st.stddev = std::sqrt(sq / n);
    if (st.stddev < 1e-12) st.stddev = 1.0;
    return st;
}

struct EvalBundle {
    Metrics patch;
    Metrics image;
    double loss = 0.0;
    double mse = 0.0;
    std::vector<std::size_t> predictions;  // per patch, in sample order
};

// Scores every patch and wraps up both granularities: per-patch counts and
// per-source majority votes (ties to the most severe class).
template <typename T>
EvalBundle evaluate(const Model<T>& m, const Standardizer& st, const SampleSet& samples,
                    std::size_t batch_size = 32) {
    if (samples.empty()) throw std::invalid_argument("evaluate: empty subset");
    const std::size_t input_size = m.config.input_size;
    const std::size_t classes = m.config.classes;
    EvalBundle out{Metrics(classes), Metrics(classes), 0.0, 0.0, {}};
    out.predictions.reserve(samples.size());

    double loss_sum = 0.0, mse_sum = 0.0;
    for (std::size_t start = 0; start < samples.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, samples.size() - start);
        Tensor<T> batch({n, 1, input_size, input_size});
        std::vector<int> targets(n);
        for (std::size_t i = 0; i < n; ++i) {
            detail::fill_input(batch, i, samples[start + i].patch, input_size, st);
            targets[i] = static_cast<int>(samples[start + i].label);
        }
        const auto logits = forward(m, batch);
        const auto sm = softmax_xent(logits, targets);
        loss_sum += sm.loss * static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < classes; ++k)
                if (sm.probabilities.at(i, k) > sm.probabilities.at(i, best)) best = k;
            out.predictions.push_back(best);
            out.patch.add(static_cast<std::size_t>(targets[i]), best);
            for (std::size_t k = 0; k < classes; ++k) {
                const double p = static_cast<double>(sm.probabilities.at(i, k));
                const double y = k == static_cast<std::size_t>(targets[i]) ? 1.0 : 0.0;
                mse_sum += (p - y) * (p - y);
            }
        }
    }
    out.loss = loss_sum / static_cast<double>(samples.size());
    out.mse = mse_sum / static_cast<double>(samples.size() * classes);

    // image level: one vote per patch, grouped by source
    std::map<std::string, std::pair<std::size_t, std::vector<std::size_t>>> by_source;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto& entry = by_source[samples[i].source_id];
        entry.first = samples[i].label;
        entry.second.push_back(out.predictions[i]);
    }
    for (const auto& [id, entry] : by_source)
        out.image.add(entry.first, majority_vote(entry.second, classes));
    return out;
}

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double val_mse = 0.0;
};

template <typename T>
struct TrainOutcome {
    Model<T> model;
    Standardizer standardizer;
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;  // zero-based index into history
    bool stopped_early = false;
    bool aborted = false;  // non-finite loss; weights are the last good checkpoint
};

// Full training loop: per-epoch shuffled augmented batches, validation
// cross-entropy monitored each epoch (MSE recorded alongside), and the
// best-epoch weights restored at the end.
template <typename T>
TrainOutcome<T> train_model(const SampleSet& train, const SampleSet& validation,
                            const ArchConfig& arch, const TrainConfig& cfg) {
    validate(cfg);
    if (train.empty() || validation.empty()) throw std::invalid_argument("train: empty split");
    const std::size_t input_size = arch.input_size;
    const std::size_t classes = arch.classes;
    for (const auto& s : train)
        if (s.label >= classes) throw std::invalid_argument("train: label out of range");

    TrainOutcome<T> out{build_model<T>(arch, cfg.seed), fit_standardizer(train, input_size), {}, 0,
                        false, false};
    Model<T>& m = out.model;
    auto params = m.parameters();
    auto opt_state = make_optimizer_state(params);

    std::vector<Tensor<T>> best;
    for (auto* p : params) best.push_back(*p);
    double best_val = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0xe70c5u, epoch));
        shuffle_rng.shuffle(order);
        const std::uint64_t aug_base = mix_seed(cfg.seed, 0xa06e57u, epoch);

        double loss_sum = 0.0;
        std::size_t hits = 0;
        bool bad = false;
        for (std::size_t start = 0; start < order.size() && !bad; start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - start);
            Tensor<T> batch({n, 1, input_size, input_size});
            std::vector<int> targets(n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t idx = order[start + i];
                const PatchSample& s = train[idx];
                targets[i] = static_cast<int>(s.label);
                if (cfg.augment_enabled) {
                    Rng aug_rng(mix_seed(aug_base, idx));
                    detail::fill_input(batch, i, augment(s.patch, cfg.augment, aug_rng), input_size,
                                       out.standardizer);
                } else {
                    detail::fill_input(batch, i, s.patch, input_size, out.standardizer);
                }
            }

            auto trace = forward_trace(m, batch);
            const auto sm = softmax_xent(trace.logits, targets);
            if (!std::isfinite(sm.loss)) {
                bad = true;
                break;
            }
            loss_sum += sm.loss * static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t bestk = 0;
                for (std::size_t k = 1; k < classes; ++k)
                    if (sm.probabilities.at(i, k) > sm.probabilities.at(i, bestk)) bestk = k;
                if (bestk == static_cast<std::size_t>(targets[i])) ++hits;
            }
            auto grads = backward_trace(m, trace, sm.grad_logits);
            try {
                optimizer_step(params, grads.list(), opt_state, cfg.optimizer);
            } catch (const std::runtime_error&) {
                bad = true;  // non-finite gradients: stop and keep the checkpoint
            }
        }
        if (bad) {
            out.aborted = true;
            break;
        }

        const auto val = evaluate(m, out.standardizer, validation, cfg.batch_size);
        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(train.size());
        stats.train_accuracy = static_cast<double>(hits) / static_cast<double>(train.size());
        stats.val_loss = val.loss;
        stats.val_accuracy = val.patch.accuracy();
        stats.val_mse = val.mse;
        out.history.push_back(stats);

        if (val.loss < best_val) {
            best_val = val.loss;
            out.best_epoch = out.history.size() - 1;
            for (std::size_t i = 0; i < params.size(); ++i) best[i] = *params[i];
        } else if (out.history.size() - 1 - out.best_epoch >= cfg.patience) {
            out.stopped_early = true;
            break;
        }
    }

    for (std::size_t i = 0; i < params.size(); ++i) *params[i] = best[i];
    return out;
}

}  // namespace tcnn
