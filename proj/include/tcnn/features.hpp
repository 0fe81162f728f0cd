#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcnn/glcm.hpp"
#include "tcnn/image.hpp"
#include "tcnn/lpq.hpp"

namespace tcnn {

struct FeatureSpan {
    std::string tag;
    std::size_t offset = 0;
    std::size_t length = 0;
};

struct FeatureVector {
    std::vector<double> values;
    std::vector<FeatureSpan> spans;
};

// Handcrafted descriptor for one patch: 256 phase-quantization bins followed
// by the 13 co-occurrence statistics, 269 values total.
inline FeatureVector extract_features(const GrayImage& patch, const LpqConfig& lpq_cfg = {},
                                      const GlcmConfig& glcm_cfg = {}) {
    FeatureVector out;
    auto hist = lpq_descriptor(patch, lpq_cfg);
    out.spans.push_back({"lpq", 0, hist.size()});
    out.values = std::move(hist);
    auto stats = haralick_features(glcm(patch, glcm_cfg));
    out.spans.push_back({"haralick", out.values.size(), stats.size()});
    out.values.insert(out.values.end(), stats.begin(), stats.end());
    return out;
}

// CSV with one named column per dimension and the class label last.
inline void write_feature_csv(const std::string& path, const std::vector<FeatureVector>& rows,
                              const std::vector<std::string>& labels) {
    if (rows.empty()) throw std::invalid_argument("feature csv: no rows");
    if (rows.size() != labels.size()) throw std::invalid_argument("feature csv: row/label count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("feature csv: cannot open " + path);
    out.precision(17);
    for (const auto& span : rows[0].spans)
        for (std::size_t i = 0; i < span.length; ++i) out << span.tag << '_' << i << ',';
    out << "label\n";
    const std::size_t width = rows[0].values.size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].values.size() != width) throw std::invalid_argument("feature csv: ragged rows");
        for (double v : rows[r].values) out << v << ',';
        out << labels[r] << '\n';
    }
    if (!out) throw std::runtime_error("feature csv: write failed for " + path);
}

}  // namespace tcnn
