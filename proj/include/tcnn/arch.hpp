#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcnn {

enum class Conv1Branch { energy, global_max };

inline Conv1Branch conv1_branch_from_string(const std::string& s) {
    if (s == "energy" || s == "avg" || s == "average") return Conv1Branch::energy;
    if (s == "max" || s == "global_max") return Conv1Branch::global_max;
    throw std::invalid_argument("unknown conv1 branch: " + s);
}

// Network configuration. The defaults realize the compact texture network:
// 224x224x1 -> conv 11x11/3 (32) -> pool 2/2 -> conv 3x3/1 (64), with the
// classifier head fed by a 96-wide vector built from global pooling of both
// convolution stages (64 energies from conv2, 32 from conv1).
struct ArchConfig {
    std::size_t input_size = 224;
    std::size_t input_channels = 1;
    std::size_t conv1_filters = 32;
    std::size_t conv1_kernel = 11;
    std::size_t conv1_stride = 3;
    std::size_t pool_window = 2;
    std::size_t pool_stride = 2;
    std::size_t conv2_filters = 64;
    std::size_t conv2_kernel = 3;
    std::size_t conv2_stride = 1;
    Conv1Branch conv1_branch = Conv1Branch::energy;
    std::size_t dense1_width = 128;
    std::size_t dense2_width = 64;
    std::size_t classes = 3;
};

struct ArchShapes {
    std::size_t conv1_map = 0;   // 72 for the default config
    std::size_t pool_map = 0;    // 36
    std::size_t conv2_map = 0;   // 34
    std::size_t feature_width = 0;  // conv2_filters + conv1_filters = 96
};

inline ArchShapes derive_shapes(const ArchConfig& c) {
    const auto valid_out = [](std::size_t in, std::size_t k, std::size_t s, const char* what) {
        if (k == 0 || s == 0 || in < k)
            throw std::invalid_argument(std::string("arch: ") + what + " does not fit its input");
        return (in - k) / s + 1;
    };
    ArchShapes d;
    d.conv1_map = valid_out(c.input_size, c.conv1_kernel, c.conv1_stride, "conv1");
    d.pool_map = valid_out(d.conv1_map, c.pool_window, c.pool_stride, "pool");
    d.conv2_map = valid_out(d.pool_map, c.conv2_kernel, c.conv2_stride, "conv2");
    d.feature_width = c.conv2_filters + c.conv1_filters;
    return d;
}

struct LayerParamCount {
    std::string name;
    std::size_t count;
};

// Closed-form trainable parameter budget, grouped the way the weights are
// stored. The default config sums to 43,267.
inline std::vector<LayerParamCount> param_table(const ArchConfig& c) {
    const ArchShapes d = derive_shapes(c);  // validates the shape chain
    (void)d;
    std::vector<LayerParamCount> t;
    t.push_back({"conv1", c.conv1_filters * (c.conv1_kernel * c.conv1_kernel * c.input_channels + 1)});
    t.push_back({"conv2", c.conv2_filters * (c.conv2_kernel * c.conv2_kernel * c.conv1_filters + 1)});
    const std::size_t fw = c.conv2_filters + c.conv1_filters;
    t.push_back({"dense1", fw * c.dense1_width + c.dense1_width});
    t.push_back({"dense2", c.dense1_width * c.dense2_width + c.dense2_width});
    t.push_back({"output", c.dense2_width * c.classes + c.classes});
    return t;
}

inline std::size_t param_total(const ArchConfig& c) {
    std::size_t total = 0;
    for (const auto& row : param_table(c)) total += row.count;
    return total;
}

}  // namespace tcnn
