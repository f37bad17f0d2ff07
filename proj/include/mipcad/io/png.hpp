#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"

// 8-bit grayscale and RGB PNG writer (zlib for IDAT and CRC).

namespace mipcad::io {

namespace detail {

inline void png_be32(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(uint8_t(x >> 24));
    v.push_back(uint8_t(x >> 16));
    v.push_back(uint8_t(x >> 8));
    v.push_back(uint8_t(x));
}

inline void png_chunk(std::ofstream& out, const char type[4], const std::vector<uint8_t>& payload) {
    std::vector<uint8_t> len;
    png_be32(len, uint32_t(payload.size()));
    out.write(reinterpret_cast<const char*>(len.data()), 4);
    out.write(type, 4);
    if (!payload.empty())
        out.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size()));
    uint32_t crc = crc32(0, reinterpret_cast<const Bytef*>(type), 4);
    if (!payload.empty()) crc = crc32(crc, payload.data(), uInt(payload.size()));
    std::vector<uint8_t> tail;
    png_be32(tail, crc);
    out.write(reinterpret_cast<const char*>(tail.data()), 4);
}

inline void write_png(const std::string& path, const uint8_t* pixels, int w, int h, int channels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("cannot write PNG: " + path);
    static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    out.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<uint8_t> ihdr;
    png_be32(ihdr, uint32_t(w));
    png_be32(ihdr, uint32_t(h));
    ihdr.push_back(8);                               // bit depth
    ihdr.push_back(channels == 1 ? 0 : 2);           // gray / truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    png_chunk(out, "IHDR", ihdr);

    // Filter byte 0 in front of every scanline, then one zlib stream.
    std::vector<uint8_t> raw;
    raw.reserve(size_t(h) * (size_t(w) * channels + 1));
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), pixels + size_t(y) * w * channels,
                   pixels + size_t(y + 1) * w * channels);
    }
    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<uint8_t> idat(bound);
    if (compress2(idat.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw format_error("zlib compression failed for " + path);
    idat.resize(bound);
    png_chunk(out, "IDAT", idat);
    png_chunk(out, "IEND", {});
}

}  // namespace detail

inline void write_png_gray(const std::string& path, const array2d<uint8_t>& img) {
    detail::write_png(path, img.data(), img.nx(), img.ny(), 1);
}

// rgb is packed rows of 3 bytes per pixel.
inline void write_png_rgb(const std::string& path, const std::vector<uint8_t>& rgb, int w, int h) {
    if (rgb.size() != size_t(w) * h * 3) throw contract_error("rgb buffer size mismatch");
    detail::write_png(path, rgb.data(), w, h, 3);
}

// Maps [lo, hi] to [0, 255] with clamping.
inline array2d<uint8_t> to_gray8(const array2d<float>& img, float lo = 0.f, float hi = 1.f) {
    array2d<uint8_t> out(img.nx(), img.ny());
    const float scale = hi > lo ? 255.f / (hi - lo) : 0.f;
    for (size_t i = 0; i < img.size(); ++i) {
        float v = (img.data()[i] - lo) * scale;
        out.data()[i] = uint8_t(v < 0 ? 0 : (v > 255 ? 255 : v + 0.5f));
    }
    return out;
}

}  // namespace mipcad::io
