#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcnn/model.hpp"

namespace tcnn {

// Weight container format (all integers little-endian):
//   "TCNW" | version u32 | record count u32
//   per record: name length u16, name bytes, rank u8, extents u32 each,
//               values as 32-bit IEEE-754
//   CRC32 (zlib polynomial) of everything before it
// Values are stored at 32-bit regardless of the in-memory precision, so a
// 64-bit model saves, loads and re-saves to byte-identical files.

inline constexpr std::uint32_t weights_format_version = 1;

namespace detail {

inline void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
    b.push_back(static_cast<unsigned char>(v & 0xff));
    b.push_back(static_cast<unsigned char>(v >> 8));
}

inline void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::vector<unsigned char>& b, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(b, bits);
}

struct ByteReader {
    const unsigned char* p;
    std::size_t left;

    void need(std::size_t n, const char* what) const {
        if (left < n) throw std::runtime_error(std::string("weights: truncated ") + what);
    }
    std::uint16_t u16() {
        need(2, "u16");
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        left -= 2;
        return v;
    }
    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        left -= 4;
        return v;
    }
    std::uint8_t u8() {
        need(1, "u8");
        std::uint8_t v = p[0];
        ++p;
        --left;
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str(std::size_t n) {
        need(n, "name");
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        left -= n;
        return s;
    }
};

}  // namespace detail

template <typename T>
std::vector<unsigned char> serialize_weights(const Model<T>& m) {
    std::vector<unsigned char> buf;
    buf.insert(buf.end(), {'T', 'C', 'N', 'W'});
    detail::put_u32(buf, weights_format_version);

    const auto params = m.parameters();
    const auto& names = Model<T>::parameter_names();
    detail::put_u32(buf, static_cast<std::uint32_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        detail::put_u16(buf, static_cast<std::uint16_t>(names[i].size()));
        buf.insert(buf.end(), names[i].begin(), names[i].end());
        buf.push_back(static_cast<unsigned char>(params[i]->rank()));
        for (std::size_t e : params[i]->shape) detail::put_u32(buf, static_cast<std::uint32_t>(e));
        for (const T v : params[i]->data) detail::put_f32(buf, static_cast<float>(v));
    }
    const std::uint32_t crc =
        static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
    detail::put_u32(buf, crc);
    return buf;
}

template <typename T>
void save_weights(const Model<T>& m, const std::string& path) {
    const std::vector<unsigned char> buf = serialize_weights(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("weights: cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("weights: write failed: " + path);
}

template <typename T>
Model<T> deserialize_weights(const std::vector<unsigned char>& buf, const ArchConfig& cfg) {
    if (buf.size() < 16) throw std::runtime_error("weights: file too short");
    const std::size_t payload = buf.size() - 4;
    const std::uint32_t want =
        static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(payload)));
    detail::ByteReader tail{buf.data() + payload, 4};
    if (tail.u32() != want) throw std::runtime_error("weights: CRC mismatch");

    detail::ByteReader r{buf.data(), payload};
    if (r.str(4) != "TCNW") throw std::runtime_error("weights: bad magic");
    const std::uint32_t version = r.u32();
    if (version != weights_format_version)
        throw std::runtime_error("weights: unsupported format version " + std::to_string(version));

    Model<T> m = model_shell<T>(cfg);
    const auto params = m.parameters();
    const auto& names = Model<T>::parameter_names();

    const std::uint32_t count = r.u32();
    if (count != params.size())
        throw std::runtime_error("weights: expected " + std::to_string(params.size()) + " records, found " +
                                 std::to_string(count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string name = r.str(r.u16());
        if (name != names[i])
            throw std::runtime_error("weights: record " + std::to_string(i) + " is '" + name + "', expected '" +
                                     names[i] + "'");
        std::vector<std::size_t> shape(r.u8());
        for (auto& e : shape) e = r.u32();
        if (shape != params[i]->shape) {
            std::string got = "[";
            for (std::size_t j = 0; j < shape.size(); ++j) got += (j ? "x" : "") + std::to_string(shape[j]);
            throw std::runtime_error("weights: shape mismatch for " + name + ": file has " + got +
                                     "], config wants " + params[i]->shape_string());
        }
        for (T& v : params[i]->data) v = static_cast<T>(r.f32());
    }
    if (r.left != 0) throw std::runtime_error("weights: trailing bytes after last record");
    return m;
}

template <typename T>
Model<T> load_weights(const std::string& path, const ArchConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("weights: cannot open: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_weights<T>(buf, cfg);
}

}  // namespace tcnn
