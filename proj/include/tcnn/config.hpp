#pragma once

#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "tcnn/arch.hpp"
#include "tcnn/splits.hpp"
#include "tcnn/synth.hpp"
#include "tcnn/trainer.hpp"

namespace tcnn {

// Flat key/value settings parsed from an ini-style file: `[section]` headers,
// `key = value` lines, `#` or `;` comments. Keys are stored as
// "section.key"; readers mark keys consumed so typos can be reported.
struct ConfigMap {
    std::map<std::string, std::string> values;
    mutable std::set<std::string> consumed;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string get_str(const std::string& key, const std::string& fallback) const {
        const auto it = values.find(key);
        if (it == values.end()) return fallback;
        consumed.insert(key);
        return it->second;
    }

    double get_f64(const std::string& key, double fallback) const {
        const auto it = values.find(key);
        if (it == values.end()) return fallback;
        consumed.insert(key);
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("trailing junk");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("config: " + key + " is not a number: " + it->second);
        }
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        const auto it = values.find(key);
        if (it == values.end()) return fallback;
        consumed.insert(key);
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("trailing junk");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("config: " + key + " is not a whole number: " + it->second);
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values.find(key);
        if (it == values.end()) return fallback;
        consumed.insert(key);
        if (it->second == "true" || it->second == "1" || it->second == "on") return true;
        if (it->second == "false" || it->second == "0" || it->second == "off") return false;
        throw std::invalid_argument("config: " + key + " is not a boolean: " + it->second);
    }

    void require_all_consumed() const {
        for (const auto& [key, value] : values)
            if (consumed.count(key) == 0)
                throw std::invalid_argument("config: unknown key " + key + " = " + value);
    }
};

namespace detail {

inline std::string trimmed(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

inline ConfigMap parse_config_text(std::istream& in, const std::string& where) {
    ConfigMap cfg;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trimmed(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw std::invalid_argument(where + ":" + std::to_string(line_no) + ": unterminated section header");
            section = detail::trimmed(t.substr(1, t.size() - 2));
            if (section.empty()) throw std::invalid_argument(where + ":" + std::to_string(line_no) + ": empty section name");
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) throw std::invalid_argument(where + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trimmed(t.substr(0, eq));
        const std::string value = detail::trimmed(t.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument(where + ":" + std::to_string(line_no) + ": empty key");
        if (section.empty()) throw std::invalid_argument(where + ":" + std::to_string(line_no) + ": key outside any [section]");
        cfg.values[section + "." + key] = value;
    }
    return cfg;
}

inline ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    return parse_config_text(in, path);
}

// `section.key=value`, as taken by the --set flag.
inline void apply_override(ConfigMap& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override must look like section.key=value: " + assignment);
    const std::string key = detail::trimmed(assignment.substr(0, eq));
    if (key.find('.') == std::string::npos)
        throw std::invalid_argument("override key needs a section prefix: " + assignment);
    cfg.values[key] = detail::trimmed(assignment.substr(eq + 1));
}

inline ArchConfig arch_from_config(const ConfigMap& c) {
    ArchConfig a;
    a.input_size = c.get_u64("arch.input_size", a.input_size);
    a.input_channels = c.get_u64("arch.input_channels", a.input_channels);
    a.conv1_filters = c.get_u64("arch.conv1_filters", a.conv1_filters);
    a.conv1_kernel = c.get_u64("arch.conv1_kernel", a.conv1_kernel);
    a.conv1_stride = c.get_u64("arch.conv1_stride", a.conv1_stride);
    a.pool_window = c.get_u64("arch.pool_window", a.pool_window);
    a.pool_stride = c.get_u64("arch.pool_stride", a.pool_stride);
    a.conv2_filters = c.get_u64("arch.conv2_filters", a.conv2_filters);
    a.conv2_kernel = c.get_u64("arch.conv2_kernel", a.conv2_kernel);
    a.conv2_stride = c.get_u64("arch.conv2_stride", a.conv2_stride);
    a.conv1_branch = conv1_branch_from_string(c.get_str(
        "arch.conv1_branch", a.conv1_branch == Conv1Branch::energy ? "energy" : "global_max"));
    a.dense1_width = c.get_u64("arch.dense1_width", a.dense1_width);
    a.dense2_width = c.get_u64("arch.dense2_width", a.dense2_width);
    a.classes = c.get_u64("arch.classes", a.classes);
    derive_shapes(a);  // validates the chain
    return a;
}

inline TrainConfig train_from_config(const ConfigMap& c, std::uint64_t seed) {
    TrainConfig t;
    t.optimizer.kind = optimizer_kind_from_string(
        c.get_str("train.optimizer", t.optimizer.kind == OptimizerKind::adam ? "adam" : "sgd"));
    t.optimizer.learning_rate = c.get_f64("train.learning_rate", t.optimizer.learning_rate);
    t.optimizer.momentum = c.get_f64("train.momentum", t.optimizer.momentum);
    t.optimizer.beta1 = c.get_f64("train.beta1", t.optimizer.beta1);
    t.optimizer.beta2 = c.get_f64("train.beta2", t.optimizer.beta2);
    t.optimizer.epsilon = c.get_f64("train.epsilon", t.optimizer.epsilon);
    t.batch_size = c.get_u64("train.batch_size", t.batch_size);
    t.max_epochs = c.get_u64("train.max_epochs", t.max_epochs);
    t.patience = c.get_u64("train.patience", t.patience);
    t.augment_enabled = c.get_bool("train.augment", t.augment_enabled);
    t.augment.flip_probability = c.get_f64("train.flip_probability", t.augment.flip_probability);
    t.augment.rotation_degrees = c.get_f64("train.rotation_degrees", t.augment.rotation_degrees);
    t.augment.width_shift = c.get_f64("train.width_shift", t.augment.width_shift);
    t.augment.height_shift = c.get_f64("train.height_shift", t.augment.height_shift);
    t.seed = c.get_u64("train.seed", seed);
    validate(t);
    return t;
}

struct PipelineConfig {
    std::size_t window = 94;
    double overlap = 0.5;
    std::size_t radial = 94;    // unfold rows
    std::size_t angular = 768;  // unfold columns
};

inline PipelineConfig pipeline_from_config(const ConfigMap& c) {
    PipelineConfig p;
    p.window = c.get_u64("pipeline.window", p.window);
    p.overlap = c.get_f64("pipeline.overlap", p.overlap);
    p.radial = c.get_u64("pipeline.radial", p.radial);
    p.angular = c.get_u64("pipeline.angular", p.angular);
    if (p.window < 2) throw std::invalid_argument("config: pipeline.window too small");
    if (p.overlap < 0.0 || p.overlap >= 1.0) throw std::invalid_argument("config: pipeline.overlap outside [0, 1)");
    return p;
}

inline SynthConfig synth_from_config(const ConfigMap& c, std::uint64_t seed) {
    SynthConfig s;
    s.per_class = c.get_u64("synth.per_class", s.per_class);
    s.width = c.get_u64("synth.width", s.width);
    s.height = c.get_u64("synth.height", s.height);
    s.gradient_amplitude = c.get_f64("synth.gradient_amplitude", s.gradient_amplitude);
    s.max_blur_spots = c.get_u64("synth.max_blur_spots", s.max_blur_spots);
    s.spot_sigma = c.get_f64("synth.spot_sigma", s.spot_sigma);
    s.seed = c.get_u64("synth.seed", seed);
    const auto load_class = [&](const char* prefix, SynthClassParams& p) {
        const std::string base = std::string("synth.") + prefix + "_";
        p.grain_scale = c.get_f64(base + "grain_scale", p.grain_scale);
        p.grain_amplitude = c.get_f64(base + "grain_amplitude", p.grain_amplitude);
        p.pit_density = c.get_f64(base + "pit_density", p.pit_density);
        p.pit_radius_min = c.get_f64(base + "pit_radius_min", p.pit_radius_min);
        p.pit_radius_max = c.get_f64(base + "pit_radius_max", p.pit_radius_max);
        p.pit_depth = c.get_f64(base + "pit_depth", p.pit_depth);
        p.blotch_density = c.get_f64(base + "blotch_density", p.blotch_density);
        p.blotch_radius_min = c.get_f64(base + "blotch_radius_min", p.blotch_radius_min);
        p.blotch_radius_max = c.get_f64(base + "blotch_radius_max", p.blotch_radius_max);
        p.blotch_depth = c.get_f64(base + "blotch_depth", p.blotch_depth);
    };
    load_class("nd", s.nd);
    load_class("mc", s.mc);
    load_class("ac", s.ac);
    validate(s);
    return s;
}

inline SplitSpec split_from_config(const ConfigMap& c, std::uint64_t seed) {
    SplitSpec s;
    s.mode = split_mode_from_string(
        c.get_str("split.mode", s.mode == SplitMode::holdout ? "holdout" : "3fold"));
    s.seed = c.get_u64("split.seed", seed);
    s.train_fraction = c.get_f64("split.train_fraction", s.train_fraction);
    s.val_fraction = c.get_f64("split.val_fraction", s.val_fraction);
    s.fold_fractions[0] = c.get_f64("split.fold1", s.fold_fractions[0]);
    s.fold_fractions[1] = c.get_f64("split.fold2", s.fold_fractions[1]);
    s.fold_fractions[2] = c.get_f64("split.fold3", s.fold_fractions[2]);
    return s;
}

}  // namespace tcnn
