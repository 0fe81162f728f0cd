#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tcnn/image.hpp"
#include "tcnn/image_io.hpp"
#include "tcnn/manifest.hpp"
#include "tcnn/rng.hpp"

namespace tcnn {

// Per-class recipe: a value-noise grain field, dark pits, and larger dark
// blotches. Densities are per 1000 square pixels so they track image size.
struct SynthClassParams {
    double grain_scale = 6.0;
    double grain_amplitude = 0.05;
    double pit_density = 0.0;
    double pit_radius_min = 1.0;
    double pit_radius_max = 3.0;
    double pit_depth = 0.0;
    double blotch_density = 0.0;
    double blotch_radius_min = 8.0;
    double blotch_radius_max = 16.0;
    double blotch_depth = 0.0;

    friend bool operator==(const SynthClassParams&, const SynthClassParams&) = default;
};

struct SynthConfig {
    std::size_t per_class = 50;
    std::size_t width = 768;
    std::size_t height = 94;
    double gradient_amplitude = 0.18;
    std::size_t max_blur_spots = 3;
    double spot_sigma = 3.0;
    std::uint64_t seed = 0;
    // ND: smooth, low-amplitude grain. MC: medium grain, sparse small pits.
    // AC: rough grain, dense pitting, large blotches.
    SynthClassParams nd{7.0, 0.05, 0.0, 1.0, 3.0, 0.0, 0.0, 8.0, 16.0, 0.0};
    SynthClassParams mc{4.0, 0.10, 0.8, 1.0, 3.0, 0.30, 0.0, 8.0, 16.0, 0.0};
    SynthClassParams ac{2.5, 0.14, 3.0, 2.0, 5.0, 0.35, 0.10, 8.0, 16.0, 0.25};
};

inline void validate(const SynthConfig& cfg) {
    if (cfg.per_class == 0) throw std::invalid_argument("synth: per_class must be positive");
    if (cfg.width < 2 || cfg.height < 2) throw std::invalid_argument("synth: image size too small");
    if (cfg.nd == cfg.mc || cfg.nd == cfg.ac || cfg.mc == cfg.ac)
        throw std::invalid_argument("synth: class parameters must be pairwise distinct");
    for (const auto* p : {&cfg.nd, &cfg.mc, &cfg.ac}) {
        if (p->grain_scale < 1.0) throw std::invalid_argument("synth: grain scale below one pixel");
        if (p->pit_radius_max < p->pit_radius_min || p->blotch_radius_max < p->blotch_radius_min)
            throw std::invalid_argument("synth: empty radius range");
    }
}

namespace detail {

// smooth random field: a coarse grid of uniforms, bilinearly interpolated
inline void add_grain(GrayImage& img, double scale, double amplitude, Rng& rng) {
    const std::size_t gw = static_cast<std::size_t>(img.width / scale) + 2;
    const std::size_t gh = static_cast<std::size_t>(img.height / scale) + 2;
    std::vector<double> grid(gw * gh);
    for (auto& v : grid) v = rng.uniform();
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) {
            const double gx = x / scale, gy = y / scale;
            const auto x0 = static_cast<std::size_t>(gx), y0 = static_cast<std::size_t>(gy);
            const double fx = gx - x0, fy = gy - y0;
            const double top = grid[y0 * gw + x0] * (1 - fx) + grid[y0 * gw + x0 + 1] * fx;
            const double bot = grid[(y0 + 1) * gw + x0] * (1 - fx) + grid[(y0 + 1) * gw + x0 + 1] * fx;
            img.at(y, x) += static_cast<float>(amplitude * (top * (1 - fy) + bot * fy - 0.5));
        }
}

// soft dark disks; depth fades quadratically toward the rim
inline void add_spots(GrayImage& img, double density, double r_min, double r_max, double depth,
                      Rng& rng) {
    const double area = static_cast<double>(img.width) * static_cast<double>(img.height);
    const auto count = static_cast<std::size_t>(std::lround(density * area / 1000.0));
    for (std::size_t s = 0; s < count; ++s) {
        const double cx = rng.uniform(0.0, static_cast<double>(img.width - 1));
        const double cy = rng.uniform(0.0, static_cast<double>(img.height - 1));
        const double r = rng.uniform(r_min, r_max);
        const long x0 = std::max(0L, std::lround(cx - r)), x1 = std::min<long>(img.width - 1, std::lround(cx + r));
        const long y0 = std::max(0L, std::lround(cy - r)), y1 = std::min<long>(img.height - 1, std::lround(cy + r));
        for (long y = y0; y <= y1; ++y)
            for (long x = x0; x <= x1; ++x) {
                const double dx = x - cx, dy = y - cy;
                const double fade = 1.0 - (dx * dx + dy * dy) / (r * r);
                if (fade > 0.0)
                    img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) -=
                        static_cast<float>(depth * fade);
            }
    }
}

}  // namespace detail

// One deterministic texture; the stream depends only on (seed, label, index).
inline GrayImage synth_image(const SynthConfig& cfg, Label label, std::size_t index) {
    validate(cfg);
    const SynthClassParams& p = label == Label::nd ? cfg.nd : label == Label::mc ? cfg.mc : cfg.ac;
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(label), index));

    GrayImage img(cfg.width, cfg.height);
    for (auto& v : img.pixels) v = 0.55f;
    detail::add_grain(img, p.grain_scale, p.grain_amplitude, rng);
    if (p.pit_density > 0.0)
        detail::add_spots(img, p.pit_density, p.pit_radius_min, p.pit_radius_max, p.pit_depth, rng);
    if (p.blotch_density > 0.0)
        detail::add_spots(img, p.blotch_density, p.blotch_radius_min, p.blotch_radius_max,
                          p.blotch_depth, rng);

    // linear illumination drift plus a global offset
    const double gx = rng.uniform(-cfg.gradient_amplitude, cfg.gradient_amplitude);
    const double gy = rng.uniform(-cfg.gradient_amplitude, cfg.gradient_amplitude);
    const double offset = rng.uniform(-0.5 * cfg.gradient_amplitude, 0.5 * cfg.gradient_amplitude);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
            img.at(y, x) += static_cast<float>(offset +
                                               gx * (x / static_cast<double>(img.width - 1) - 0.5) +
                                               gy * (y / static_cast<double>(img.height - 1) - 0.5));

    // up to max_blur_spots circular regions lose focus
    const auto spots = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(cfg.max_blur_spots)));
    if (spots > 0) {
        const GrayImage soft = gaussian_blur(img, cfg.spot_sigma);
        for (std::size_t s = 0; s < spots; ++s) {
            const double cx = rng.uniform(0.0, static_cast<double>(img.width - 1));
            const double cy = rng.uniform(0.0, static_cast<double>(img.height - 1));
            const double r = rng.uniform(10.0, 25.0);
            const long x0 = std::max(0L, std::lround(cx - r)), x1 = std::min<long>(img.width - 1, std::lround(cx + r));
            const long y0 = std::max(0L, std::lround(cy - r)), y1 = std::min<long>(img.height - 1, std::lround(cy + r));
            for (long y = y0; y <= y1; ++y)
                for (long x = x0; x <= x1; ++x) {
                    const double dx = x - cx, dy = y - cy;
                    const double alpha = std::max(0.0, 1.0 - (dx * dx + dy * dy) / (r * r));
                    auto& v = img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
                    v = static_cast<float>((1.0 - alpha) * v +
                                           alpha * soft.at(static_cast<std::size_t>(y),
                                                           static_cast<std::size_t>(x)));
                }
        }
    }
    for (auto& v : img.pixels) v = clamp01(v);
    return img;
}

struct SourceImage {
    std::string id;
    Label label;
    GrayImage image;
};

inline std::string source_id_for(Label label, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%03zu", label_name(label), index);
    std::string id(buf);
    for (auto& c : id) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return id;
}

// Full corpus in memory, grouped class by class.
inline std::vector<SourceImage> synth_corpus(const SynthConfig& cfg) {
    validate(cfg);
    std::vector<SourceImage> out;
    out.reserve(3 * cfg.per_class);
    for (Label label : {Label::nd, Label::mc, Label::ac})
        for (std::size_t i = 0; i < cfg.per_class; ++i)
            out.push_back({source_id_for(label, i), label, synth_image(cfg, label, i)});
    return out;
}

// Writes `<dir>/sources/<id>.png` for every generated image.
inline std::vector<SourceImage> synth_dataset(const SynthConfig& cfg, const std::string& dir) {
    namespace fs = std::filesystem;
    auto corpus = synth_corpus(cfg);
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "sources", ec);
    if (ec) throw std::runtime_error("synth: cannot create " + dir + ": " + ec.message());
    for (const auto& src : corpus)
        write_image((fs::path(dir) / "sources" / (src.id + ".png")).string(), src.image);
    return corpus;
}

}  // namespace tcnn
