#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcnn/manifest.hpp"
#include "tcnn/rng.hpp"

namespace tcnn {

enum class SplitMode { threefold, holdout };

inline SplitMode split_mode_from_string(const std::string& s) {
    if (s == "3fold" || s == "threefold" || s == "cv") return SplitMode::threefold;
    if (s == "holdout" || s == "hold-out") return SplitMode::holdout;
    throw std::invalid_argument("unknown split mode: " + s);
}

struct SplitSpec {
    SplitMode mode = SplitMode::holdout;
    std::uint64_t seed = 0;
    double train_fraction = 0.68;                      // holdout: train vs test, by source
    double val_fraction = 0.2;                         // of the training sources
    std::array<double, 3> fold_fractions = {0.34, 0.34, 0.32};
};

// Subsets always hold whole source images; patches follow their source.
struct SplitResult {
    DatasetManifest train;
    DatasetManifest validation;
    DatasetManifest test;
};

namespace detail {

// Largest-remainder rounding of n into integer parts proportional to
// `fractions`; ties go to the earlier part, so the result is deterministic.
inline std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& fractions) {
    std::vector<std::size_t> counts(fractions.size());
    std::vector<double> remainders(fractions.size());
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        const double exact = fractions[k] * static_cast<double>(n);
        counts[k] = static_cast<std::size_t>(exact);
        remainders[k] = exact - static_cast<double>(counts[k]);
        assigned += counts[k];
    }
    while (assigned < n) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < fractions.size(); ++k)
            if (remainders[k] > remainders[best]) best = k;
        ++counts[best];
        remainders[best] = -1.0;
        ++assigned;
    }
    return counts;
}

// class-grouped source ids, each group shuffled by its own derived stream
inline std::array<std::vector<std::string>, label_count> shuffled_groups(
    const std::vector<SourceEntry>& sources, std::uint64_t seed) {
    std::array<std::vector<std::string>, label_count> groups;
    for (const auto& s : sources) groups[static_cast<std::size_t>(s.label)].push_back(s.id);
    for (std::size_t c = 0; c < label_count; ++c) {
        Rng rng(mix_seed(seed, 0x5b17u, c));
        rng.shuffle(groups[c]);
    }
    return groups;
}

inline void append_patches(DatasetManifest& out, const DatasetManifest& manifest,
                           const std::map<std::string, int>& assignment, int wanted,
                           const char* split_name) {
    for (const auto& rec : manifest) {
        const auto it = assignment.find(rec.source_id);
        if (it == assignment.end()) throw std::logic_error("split: unassigned source " + rec.source_id);
        if (it->second != wanted) continue;
        PatchRecord r = rec;
        r.split = split_name;
        out.push_back(std::move(r));
    }
}

inline void assert_no_leakage(const SplitResult& split) {
    std::map<std::string, int> owner;
    int subset = 0;
    for (const auto* part : {&split.train, &split.validation, &split.test}) {
        for (const auto& rec : *part) {
            const auto it = owner.find(rec.source_id);
            if (it != owner.end() && it->second != subset)
                throw std::logic_error("split: source " + rec.source_id + " appears in two subsets");
            owner[rec.source_id] = subset;
        }
        ++subset;
    }
}

}  // namespace detail

// Stratified three-way partition of the source images, then one experiment
// per rotation of the folds through the (train, validation, test) roles.
inline std::array<SplitResult, 3> make_folds(const DatasetManifest& manifest, const SplitSpec& spec) {
    if (manifest.empty()) throw std::invalid_argument("split: empty manifest");
    const double fsum = spec.fold_fractions[0] + spec.fold_fractions[1] + spec.fold_fractions[2];
    if (std::abs(fsum - 1.0) > 1e-9) throw std::invalid_argument("split: fold fractions must sum to 1");
    const auto sources = list_sources(manifest);
    if (sources.size() < 3) throw std::invalid_argument("split: fewer source images than folds");

    const auto groups = detail::shuffled_groups(sources, spec.seed);
    std::map<std::string, int> fold_of;
    const std::vector<double> fractions(spec.fold_fractions.begin(), spec.fold_fractions.end());
    for (const auto& group : groups) {
        const auto quota = detail::apportion(group.size(), fractions);
        std::size_t next = 0;
        for (int fold = 0; fold < 3; ++fold)
            for (std::size_t i = 0; i < quota[static_cast<std::size_t>(fold)]; ++i)
                fold_of[group[next++]] = fold;
    }

    std::array<SplitResult, 3> experiments;
    for (int r = 0; r < 3; ++r) {
        SplitResult& split = experiments[static_cast<std::size_t>(r)];
        detail::append_patches(split.train, manifest, fold_of, r, "train");
        detail::append_patches(split.validation, manifest, fold_of, (r + 1) % 3, "validation");
        detail::append_patches(split.test, manifest, fold_of, (r + 2) % 3, "test");
        detail::assert_no_leakage(split);
    }
    return experiments;
}

// Train/test by source, then a share of the training sources moves to
// validation. With defaults and 150 sources this realizes 82/20/48.
inline SplitResult make_holdout(const DatasetManifest& manifest, const SplitSpec& spec) {
    if (manifest.empty()) throw std::invalid_argument("split: empty manifest");
    if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0)
        throw std::invalid_argument("split: train fraction must be inside (0, 1)");
    if (spec.val_fraction < 0.0 || spec.val_fraction >= 1.0)
        throw std::invalid_argument("split: validation fraction must be inside [0, 1)");
    const auto sources = list_sources(manifest);
    if (sources.size() < 2) throw std::invalid_argument("split: too few source images");

    const auto groups = detail::shuffled_groups(sources, spec.seed);
    std::array<std::size_t, label_count> train_quota{};
    std::size_t train_total = 0;
    for (std::size_t c = 0; c < label_count; ++c) {
        train_quota[c] = detail::apportion(groups[c].size(), {spec.train_fraction, 1.0 - spec.train_fraction})[0];
        train_total += train_quota[c];
    }
    // validation quota apportioned across classes in proportion to their
    // training counts, so the overall share stays closest to the request
    const auto val_total = static_cast<std::size_t>(std::lround(spec.val_fraction * static_cast<double>(train_total)));
    std::vector<double> weights(label_count);
    for (std::size_t c = 0; c < label_count; ++c)
        weights[c] = train_total == 0 ? 0.0 : static_cast<double>(train_quota[c]) / static_cast<double>(train_total);
    const auto val_quota = detail::apportion(val_total, weights);

    std::map<std::string, int> subset_of;  // 0 train, 1 validation, 2 test
    for (std::size_t c = 0; c < label_count; ++c) {
        if (val_quota[c] > train_quota[c]) throw std::invalid_argument("split: validation share exceeds training share");
        for (std::size_t i = 0; i < groups[c].size(); ++i) {
            int subset = 2;
            if (i < train_quota[c]) subset = i < val_quota[c] ? 1 : 0;
            subset_of[groups[c][i]] = subset;
        }
    }

    SplitResult split;
    detail::append_patches(split.train, manifest, subset_of, 0, "train");
    detail::append_patches(split.validation, manifest, subset_of, 1, "validation");
    detail::append_patches(split.test, manifest, subset_of, 2, "test");
    detail::assert_no_leakage(split);
    return split;
}

}  // namespace tcnn
