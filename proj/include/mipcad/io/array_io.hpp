#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"

// Portable binary array container used for every cached artifact.
// Fixed little-endian layout:
//   8 bytes  magic "MCADARR\n"
//   u32      version (1)
//   u32      dtype   (1 = u8, 2 = i16, 3 = f32)
//   u32      ndim    (2 or 3)
//   u32      reserved (0)
//   u64[3]   dims (trailing dims 1 when ndim < 3)
//   f64[3]   spacing
//   f64[3]   origin
//   payload, x fastest

namespace mipcad::io {

namespace detail {

constexpr char array_magic[8] = {'M', 'C', 'A', 'D', 'A', 'R', 'R', '\n'};

template <typename T> struct dtype_code;
template <> struct dtype_code<uint8_t> { static constexpr uint32_t value = 1; };
template <> struct dtype_code<int16_t> { static constexpr uint32_t value = 2; };
template <> struct dtype_code<float> { static constexpr uint32_t value = 3; };

struct array_header {
    uint32_t version, dtype, ndim, reserved;
    uint64_t dims[3];
    double spacing[3];
    double origin[3];
};

}  // namespace detail

template <typename T>
void save_array(const std::string& path, const array3d<T>& a,
                vec3d spacing = {1, 1, 1}, vec3d origin = {0, 0, 0}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("cannot write array: " + path);
    out.write(detail::array_magic, 8);
    detail::array_header h{1, detail::dtype_code<T>::value, 3, 0,
                           {uint64_t(a.nx()), uint64_t(a.ny()), uint64_t(a.nz())},
                           {spacing.x, spacing.y, spacing.z},
                           {origin.x, origin.y, origin.z}};
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    out.write(reinterpret_cast<const char*>(a.data()), std::streamsize(a.size() * sizeof(T)));
    if (!out) throw format_error("short write: " + path);
}

template <typename T>
array3d<T> load_array(const std::string& path, vec3d* spacing = nullptr, vec3d* origin = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open array: " + path);
    char magic[8];
    detail::array_header h;
    if (!in.read(magic, 8) || std::memcmp(magic, detail::array_magic, 8) != 0)
        throw format_error("not an array container: " + path);
    if (!in.read(reinterpret_cast<char*>(&h), sizeof(h)))
        throw format_error("truncated array header: " + path);
    if (h.version != 1) throw format_error("unknown array container version");
    if (h.dtype != detail::dtype_code<T>::value)
        throw format_error("array dtype mismatch in " + path);
    array3d<T> a(int(h.dims[0]), int(h.dims[1]), int(h.dims[2]));
    if (!in.read(reinterpret_cast<char*>(a.data()), std::streamsize(a.size() * sizeof(T))))
        throw integrity_error("array payload shorter than header dims: " + path);
    if (spacing) *spacing = {h.spacing[0], h.spacing[1], h.spacing[2]};
    if (origin) *origin = {h.origin[0], h.origin[1], h.origin[2]};
    return a;
}

template <typename T>
void save_image(const std::string& path, const array2d<T>& img) {
    array3d<T> wrap(img.nx(), img.ny(), 1);
    std::copy(img.data(), img.data() + img.size(), wrap.data());
    save_array(path, wrap);
}

template <typename T>
array2d<T> load_image(const std::string& path) {
    auto a = load_array<T>(path);
    if (a.nz() != 1) throw format_error("expected a single-slice array: " + path);
    return a.slice_copy(0);
}

}  // namespace mipcad::io
