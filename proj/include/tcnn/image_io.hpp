#pragma once

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcnn/image.hpp"

namespace tcnn {

inline std::uint8_t to_u8(float v) { return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0f)); }
inline float from_u8(std::uint8_t v) { return static_cast<float>(v) / 255.0f; }

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

inline void write_png(const std::string& path, const GrayImage& img) {
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("png: cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png: writer allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png: info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png: write failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<std::uint8_t> row(img.width);
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) row[x] = to_u8(img.at(y, x));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline GrayImage read_png(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("png: cannot open: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png: reader allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png: info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("png: not a readable PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // normalize whatever arrives to 8-bit grayscale
    const png_byte color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);

    GrayImage img(png_get_image_width(png, info), png_get_image_height(png, info));
    std::vector<std::uint8_t> row(img.width);
    for (std::size_t y = 0; y < img.height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (std::size_t x = 0; x < img.width; ++x) img.at(y, x) = from_u8(row[x]);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void write_pgm(const std::string& path, const GrayImage& img) {
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("pgm: cannot open for writing: " + path);
    std::fprintf(fp.get(), "P5\n%zu %zu\n255\n", img.width, img.height);
    std::vector<std::uint8_t> row(img.width);
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) row[x] = to_u8(img.at(y, x));
        if (std::fwrite(row.data(), 1, row.size(), fp.get()) != row.size())
            throw std::runtime_error("pgm: write failed: " + path);
    }
}

inline GrayImage read_pgm(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("pgm: cannot open: " + path);

    const auto next_token = [&]() {
        std::string tok;
        int c;
        while ((c = std::fgetc(fp.get())) != EOF) {
            if (c == '#') {
                while ((c = std::fgetc(fp.get())) != EOF && c != '\n') {
                }
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        if (tok.empty()) throw std::runtime_error("pgm: truncated header: " + path);
        return tok;
    };

    if (next_token() != "P5") throw std::runtime_error("pgm: only binary P5 supported: " + path);
    const unsigned long w = std::stoul(next_token());
    const unsigned long h = std::stoul(next_token());
    const unsigned long maxval = std::stoul(next_token());
    if (w == 0 || h == 0 || maxval != 255) throw std::runtime_error("pgm: unsupported geometry/depth: " + path);

    GrayImage img(w, h);
    std::vector<std::uint8_t> row(img.width);
    for (std::size_t y = 0; y < img.height; ++y) {
        if (std::fread(row.data(), 1, row.size(), fp.get()) != row.size())
            throw std::runtime_error("pgm: truncated pixel data: " + path);
        for (std::size_t x = 0; x < img.width; ++x) img.at(y, x) = from_u8(row[x]);
    }
    return img;
}

// Extension-dispatched entry points; PNG and binary PGM are the two formats
// everything in this project reads and writes.
inline GrayImage read_image(const std::string& path) {
    if (detail::ends_with(path, ".png")) return read_png(path);
    if (detail::ends_with(path, ".pgm")) return read_pgm(path);
    throw std::runtime_error("image: unsupported extension (want .png or .pgm): " + path);
}

inline void write_image(const std::string& path, const GrayImage& img) {
    if (!img.valid()) throw std::invalid_argument("image: refusing to write an empty/inconsistent image");
    if (detail::ends_with(path, ".png")) return write_png(path, img);
    if (detail::ends_with(path, ".pgm")) return write_pgm(path, img);
    throw std::runtime_error("image: unsupported extension (want .png or .pgm): " + path);
}

}  // namespace tcnn
