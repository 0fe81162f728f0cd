#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <vector>

#include "tcnn/augment.hpp"
#include "tcnn/batch.hpp"
#include "tcnn/bicubic.hpp"
#include "tcnn/image_io.hpp"
#include "tcnn/log_polar.hpp"
#include "tcnn/patches.hpp"

using tcnn::GrayImage;
using tcnn::Rng;

namespace {

GrayImage noise_image(std::size_t w, std::size_t h, Rng& rng) {
    GrayImage img(w, h);
    for (auto& v : img.pixels) v = static_cast<float>(rng.uniform());
    return img;
}

std::vector<std::uint8_t> quantized(const GrayImage& img) {
    std::vector<std::uint8_t> q(img.pixels.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = tcnn::to_u8(img.pixels[i]);
    return q;
}

}  // namespace

TEST_CASE("eight-bit conversion round-trips every level", "[image]") {
    for (int k = 0; k < 256; ++k)
        CHECK(tcnn::to_u8(tcnn::from_u8(static_cast<std::uint8_t>(k))) == k);
    CHECK(tcnn::from_u8(255) == 1.0f);
    CHECK(tcnn::from_u8(0) == 0.0f);
}

TEST_CASE("png and pgm files round-trip", "[image]") {
    namespace fs = std::filesystem;
    Rng rng(1);
    GrayImage img = noise_image(37, 23, rng);
    for (const char* name : {"tcnn_io_test.png", "tcnn_io_test.pgm"}) {
        const std::string path = (fs::temp_directory_path() / name).string();
        tcnn::write_image(path, img);
        GrayImage back = tcnn::read_image(path);
        REQUIRE(back.width == img.width);
        REQUIRE(back.height == img.height);
        CHECK(quantized(back) == quantized(img));
        // a second write of the loaded image is byte-stable
        tcnn::write_image(path, back);
        CHECK(quantized(tcnn::read_image(path)) == quantized(img));
        fs::remove(path);
    }
    CHECK_THROWS_AS(tcnn::read_image("/nonexistent/v.tiff"), std::runtime_error);
    CHECK_THROWS_AS(tcnn::read_image("/nonexistent/v.png"), std::runtime_error);
}

TEST_CASE("gaussian blur preserves constants and stays in range", "[image]") {
    GrayImage flat(20, 16, 0.625f);
    GrayImage blurred = tcnn::gaussian_blur(flat, 1.5);
    for (float v : blurred.pixels) CHECK(v == Catch::Approx(0.625f).margin(1e-6));

    Rng rng(2);
    GrayImage img = noise_image(20, 16, rng);
    GrayImage b = tcnn::gaussian_blur(img, 1.0);
    for (float v : b.pixels) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    CHECK(tcnn::gaussian_blur(img, 0.0).pixels == img.pixels);
}

TEST_CASE("unfold produces the configured strip geometry", "[pipeline]") {
    GrayImage img(1024, 768, 0.5f);
    auto geom = tcnn::default_geometry(img);
    auto out = tcnn::unfold_log_polar(img, geom);
    CHECK(out.height == 94);
    CHECK(out.width == 768);
    CHECK(geom.r_max == Catch::Approx(383.5));
    CHECK(geom.r_min == Catch::Approx(38.35));
}

TEST_CASE("unfold maps concentric rings to constant rows", "[pipeline]") {
    // Ring value depends only on floor(radius/8). Rows whose radius sits more
    // than 1.5 px inside a ring have all four bilinear neighbors in that ring,
    // so those rows must come out exactly constant.
    GrayImage img(512, 512);
    const double cx = 255.5, cy = 255.5;
    for (std::size_t y = 0; y < 512; ++y)
        for (std::size_t x = 0; x < 512; ++x) {
            const double r = std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy);
            img.at(y, x) = static_cast<float>((static_cast<int>(r / 8.0) % 5) * 0.2);
        }
    auto geom = tcnn::default_geometry(img);
    auto out = tcnn::unfold_log_polar(img, geom);

    int checked = 0;
    for (std::size_t i = 0; i < geom.radial; ++i) {
        const double r =
            geom.r_min * std::pow(geom.r_max / geom.r_min, static_cast<double>(i) / static_cast<double>(geom.radial - 1));
        const double into_ring = std::fmod(r, 8.0);
        if (into_ring < 1.6 || into_ring > 6.4) continue;
        float lo = 1.0f, hi = 0.0f;
        for (std::size_t j = 0; j < geom.angular; ++j) {
            lo = std::min(lo, out.at(i, j));
            hi = std::max(hi, out.at(i, j));
        }
        CHECK(lo == hi);
        ++checked;
    }
    CHECK(checked >= 30);
}

TEST_CASE("unfold maps a half-plane edge to a mid-width column switch", "[pipeline]") {
    GrayImage img(800, 800);
    for (std::size_t y = 0; y < 800; ++y)
        for (std::size_t x = 0; x < 800; ++x) img.at(y, x) = y < 400 ? 0.25f : 0.75f;
    auto geom = tcnn::default_geometry(img);
    auto out = tcnn::unfold_log_polar(img, geom);

    const std::size_t a = geom.angular;
    for (std::size_t i = 0; i < geom.radial; ++i) {
        CHECK(out.at(i, a / 4) == Catch::Approx(0.75f));      // straight down in image coords
        CHECK(out.at(i, 3 * a / 4) == Catch::Approx(0.25f));  // straight up
        // the lower->upper switch lands within one column of a/2... the edge
        // column itself may interpolate both sides
        CHECK(out.at(i, a / 2 - 2) > 0.5f);
        CHECK(out.at(i, a / 2 + 2) < 0.5f);
        std::size_t cross = 0;
        for (std::size_t j = a / 4; j <= 3 * a / 4; ++j)
            if (out.at(i, j) < 0.5f) {
                cross = j;
                break;
            }
        CHECK(cross >= a / 2 - 1);
        CHECK(cross <= a / 2 + 1);
    }
}

TEST_CASE("unfolding a rotated image is a circular column shift", "[pipeline]") {
    Rng rng(3);
    GrayImage img = tcnn::gaussian_blur(noise_image(301, 301, rng), 2.0);
    tcnn::UnfoldGeometry geom = tcnn::default_geometry(img);
    geom.r_max = 100.0;  // keep every rotated sample inside the source frame
    geom.r_min = 10.0;

    const std::size_t k = 96;  // columns; 96/768 of a turn = 45 degrees
    const double phi = 2.0 * 3.14159265358979323846 * static_cast<double>(k) / static_cast<double>(geom.angular);
    const double c = std::cos(phi), s = std::sin(phi);
    GrayImage rotated(img.width, img.height);
    const double cx = 150.0, cy = 150.0;
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) {
            const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
            rotated.at(y, x) = tcnn::bilinear_sample(img, cx + c * dx + s * dy, cy - s * dx + c * dy);
        }

    auto base = tcnn::unfold_log_polar(img, geom);
    auto rot = tcnn::unfold_log_polar(rotated, geom);
    double total = 0.0;
    for (std::size_t i = 0; i < geom.radial; ++i)
        for (std::size_t j = 0; j < geom.angular; ++j)
            total += std::abs(rot.at(i, j) - base.at(i, (j + geom.angular - k) % geom.angular));
    const double mean_abs = total / static_cast<double>(geom.radial * geom.angular);
    CHECK(mean_abs < 0.02);
}

TEST_CASE("unfold rejects bad geometry", "[pipeline]") {
    GrayImage img(100, 100, 0.5f);
    auto geom = tcnn::default_geometry(img);
    auto bad = geom;
    bad.r_min = 0.0;
    CHECK_THROWS_AS(tcnn::unfold_log_polar(img, bad), std::invalid_argument);
    bad = geom;
    bad.center_x = 500.0;
    CHECK_THROWS_AS(tcnn::unfold_log_polar(img, bad), std::invalid_argument);
    bad = geom;
    bad.r_max = bad.r_min;
    CHECK_THROWS_AS(tcnn::unfold_log_polar(img, bad), std::invalid_argument);
}

TEST_CASE("a 94x768 strip slices into fifteen windows", "[pipeline]") {
    Rng rng(4);
    GrayImage strip = noise_image(768, 94, rng);
    auto set = tcnn::slice_patches(strip);
    REQUIRE(set.patches.size() == 15);
    REQUIRE(set.offsets.size() == 15);
    for (std::size_t p = 0; p < 15; ++p) {
        CHECK(set.offsets[p] == p * 47);
        CHECK(set.patches[p].width == 94);
        CHECK(set.patches[p].height == 94);
    }
    // exact copies of the source windows
    for (std::size_t y = 0; y < 94; ++y)
        for (std::size_t x = 0; x < 94; ++x) CHECK(set.patches[14].at(y, x) == strip.at(y, 14 * 47 + x));

    // every column up to the last window's right edge is covered
    std::vector<bool> covered(768, false);
    for (std::size_t off : set.offsets)
        for (std::size_t x = off; x < off + 94; ++x) covered[x] = true;
    for (std::size_t x = 0; x < 14 * 47 + 94; ++x) CHECK(covered[x]);
    CHECK_FALSE(covered[14 * 47 + 94]);  // trailing columns drop
}

TEST_CASE("slice edge cases", "[pipeline]") {
    Rng rng(5);
    auto single = tcnn::slice_patches(noise_image(94, 94, rng));
    CHECK(single.patches.size() == 1);

    CHECK_THROWS_AS(tcnn::slice_patches(noise_image(768, 93, rng)), std::invalid_argument);
    CHECK_THROWS_AS(tcnn::slice_patches(noise_image(80, 94, rng)), std::invalid_argument);
    CHECK_THROWS_AS(tcnn::slice_patches(noise_image(768, 94, rng), 94, 1.0), std::invalid_argument);
}

TEST_CASE("bicubic upscaling hits the target size and preserves constants", "[pipeline]") {
    GrayImage flat(94, 94, 0.375f);
    auto big = tcnn::upscale_bicubic(flat, 224);
    CHECK(big.width == 224);
    CHECK(big.height == 224);
    for (float v : big.pixels) CHECK(v == 0.375f);

    CHECK_THROWS_AS(tcnn::upscale_bicubic(flat, 93), std::invalid_argument);
}

TEST_CASE("bicubic reproduces linear ramps", "[pipeline]") {
    GrayImage ramp(94, 94);
    const double slope = 0.8 / 93.0;
    for (std::size_t y = 0; y < 94; ++y)
        for (std::size_t x = 0; x < 94; ++x) ramp.at(y, x) = static_cast<float>(0.1 + slope * static_cast<double>(x));

    auto big = tcnn::upscale_bicubic(ramp, 224);
    const double sx = 94.0 / 224.0;
    for (std::size_t y = 0; y < 224; ++y)
        for (std::size_t x = 0; x < 224; ++x) {
            // borders replicate, so the reference ramp clamps with them
            const double fx = std::min(93.0, std::max(0.0, (static_cast<double>(x) + 0.5) * sx - 0.5));
            const double want = 0.1 + slope * fx;
            REQUIRE(std::abs(big.at(y, x) - want) < 1e-3);
        }
}

TEST_CASE("augment with a zero config is a bit-exact identity", "[pipeline]") {
    Rng rng(6);
    GrayImage patch = noise_image(94, 94, rng);
    tcnn::AugmentConfig cfg;
    cfg.flip_probability = 0.0;
    cfg.rotation_degrees = 0.0;
    cfg.width_shift = 0.0;
    cfg.height_shift = 0.0;
    Rng stream(7);
    GrayImage out = tcnn::augment(patch, cfg, stream);
    CHECK(out.pixels == patch.pixels);
}

TEST_CASE("forced flip mirrors and is an involution", "[pipeline]") {
    Rng rng(8);
    GrayImage patch = noise_image(31, 17, rng);
    tcnn::AugmentConfig cfg;
    cfg.flip_probability = 1.0;
    cfg.rotation_degrees = 0.0;
    cfg.width_shift = 0.0;
    cfg.height_shift = 0.0;

    Rng s1(9);
    GrayImage flipped = tcnn::augment(patch, cfg, s1);
    for (std::size_t y = 0; y < patch.height; ++y)
        for (std::size_t x = 0; x < patch.width; ++x) CHECK(flipped.at(y, x) == patch.at(y, patch.width - 1 - x));
    Rng s2(10);
    GrayImage restored = tcnn::augment(flipped, cfg, s2);
    CHECK(restored.pixels == patch.pixels);
}

TEST_CASE("augmentation streams are seed-deterministic", "[pipeline]") {
    Rng rng(11);
    GrayImage patch = noise_image(94, 94, rng);
    tcnn::AugmentConfig cfg;  // defaults: flip 0.5, rotate 15, shifts 0.1
    Rng a(1234), b(1234), c(1235);
    GrayImage out_a = tcnn::augment(patch, cfg, a);
    GrayImage out_b = tcnn::augment(patch, cfg, b);
    GrayImage out_c = tcnn::augment(patch, cfg, c);
    CHECK(out_a.pixels == out_b.pixels);
    CHECK(out_a.width == 94);
    CHECK(out_a.height == 94);
    CHECK(out_a.pixels != out_c.pixels);

    tcnn::AugmentConfig bad;
    bad.flip_probability = 1.5;
    CHECK_THROWS_AS(tcnn::augment(patch, bad, a), std::invalid_argument);
}

TEST_CASE("to_tensor stacks patches without rescaling", "[pipeline]") {
    Rng rng(12);
    std::vector<GrayImage> patches;
    for (int i = 0; i < 15; ++i) patches.push_back(noise_image(224, 224, rng));
    patches[0].at(0, 0) = tcnn::from_u8(255);
    patches[0].at(0, 1) = tcnn::from_u8(0);

    auto t = tcnn::to_tensor<float>(patches);
    REQUIRE(t.shape == std::vector<std::size_t>{15, 1, 224, 224});
    CHECK(t.at(0, 0, 0, 0) == 1.0f);
    CHECK(t.at(0, 0, 0, 1) == 0.0f);
    CHECK(t.at(3, 0, 5, 7) == patches[3].at(5, 7));

    patches.push_back(noise_image(10, 10, rng));
    CHECK_THROWS_AS(tcnn::to_tensor<float>(patches), std::invalid_argument);
}

TEST_CASE("standardizer round trip and moments", "[pipeline]") {
    Rng rng(13);
    tcnn::Tensor<float> batch({4, 1, 10, 10});
    for (auto& v : batch.data) v = static_cast<float>(rng.uniform(0.2, 0.9));
    const auto original = batch.data;

    auto s = tcnn::Standardizer::fit(batch);
    s.apply(batch);
    double mean = 0.0, var = 0.0;
    for (float v : batch.data) mean += v;
    mean /= static_cast<double>(batch.size());
    for (float v : batch.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(batch.size());
    CHECK(std::abs(mean) < 1e-5);
    CHECK(var == Catch::Approx(1.0).margin(1e-4));

    s.invert(batch);
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(std::abs(batch.data[i] - original[i]) < 1e-6);

    tcnn::Tensor<float> flat({2, 2}, 0.5f);
    auto sf = tcnn::Standardizer::fit(flat);
    CHECK(sf.stddev == 1.0);  // constant-input guard
    sf.apply(flat);
    for (float v : flat.data) CHECK(v == 0.0f);
}
