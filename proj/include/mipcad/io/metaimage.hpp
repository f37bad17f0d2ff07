#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"

// Minimal MetaImage (.mhd + .raw) support: the subset the LUNA16 volumes
// use, plus a writer so synthetic datasets round-trip through the same path.

namespace mipcad::io {

enum class element_type { u8, i8, i16, u16, i32, u32, f32, f64 };

inline size_t element_bytes(element_type t) {
    switch (t) {
        case element_type::u8:
        case element_type::i8: return 1;
        case element_type::i16:
        case element_type::u16: return 2;
        case element_type::i32:
        case element_type::u32:
        case element_type::f32: return 4;
        case element_type::f64: return 8;
    }
    return 0;
}

inline element_type parse_element_type(const std::string& s) {
    if (s == "MET_UCHAR") return element_type::u8;
    if (s == "MET_CHAR") return element_type::i8;
    if (s == "MET_SHORT") return element_type::i16;
    if (s == "MET_USHORT") return element_type::u16;
    if (s == "MET_INT") return element_type::i32;
    if (s == "MET_UINT") return element_type::u32;
    if (s == "MET_FLOAT") return element_type::f32;
    if (s == "MET_DOUBLE") return element_type::f64;
    throw format_error("unsupported ElementType: " + s);
}

struct metaimage_header {
    vec3i dims{0, 0, 0};
    vec3d spacing{1, 1, 1};
    vec3d origin{0, 0, 0};
    element_type type = element_type::i16;
    bool msb = false;
    std::string data_file;  // "LOCAL" means payload follows the header
    size_t header_size = 0; // offset into data file, 0 unless HeaderSize given
};

namespace detail {

inline std::vector<double> parse_numbers(const std::string& s, const std::string& key) {
    std::istringstream iss(s);
    std::vector<double> out;
    double v;
    while (iss >> v) out.push_back(v);
    if (out.empty()) throw format_error("no numeric values for " + key);
    return out;
}

inline void byte_swap(std::vector<char>& buf, size_t width) {
    if (width <= 1) return;
    for (size_t i = 0; i + width <= buf.size(); i += width)
        std::reverse(buf.begin() + i, buf.begin() + i + width);
}

}  // namespace detail

inline metaimage_header read_metaimage_header(const std::string& path, size_t* header_end = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open MetaImage header: " + path);

    metaimage_header h;
    bool have_dims = false, have_spacing = false, have_type = false;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.empty()) continue;
            throw format_error("malformed header line in " + path + ": " + line);
        }
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t") + 1);
            return s;
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));

        if (key == "NDims") {
            if (val != "3") throw format_error("only NDims = 3 supported, got " + val);
        } else if (key == "DimSize") {
            auto v = detail::parse_numbers(val, key);
            if (v.size() != 3) throw format_error("DimSize needs 3 values");
            h.dims = {int(v[0]), int(v[1]), int(v[2])};
            have_dims = true;
        } else if (key == "ElementSpacing" || (key == "ElementSize" && !have_spacing)) {
            auto v = detail::parse_numbers(val, key);
            if (v.size() != 3) throw format_error(key + " needs 3 values");
            h.spacing = {v[0], v[1], v[2]};
            have_spacing = true;
        } else if (key == "Offset" || key == "Origin" || key == "Position") {
            auto v = detail::parse_numbers(val, key);
            if (v.size() != 3) throw format_error(key + " needs 3 values");
            h.origin = {v[0], v[1], v[2]};
        } else if (key == "ElementType") {
            h.type = parse_element_type(val);
            have_type = true;
        } else if (key == "ElementByteOrderMSB" || key == "BinaryDataByteOrderMSB") {
            h.msb = (val == "True" || val == "true" || val == "1");
        } else if (key == "CompressedData") {
            if (val == "True" || val == "true")
                throw format_error("compressed MetaImage data not supported: " + path);
        } else if (key == "HeaderSize") {
            h.header_size = size_t(detail::parse_numbers(val, key)[0]);
        } else if (key == "ElementDataFile") {
            h.data_file = val;
            break;  // per spec the data file entry terminates the header
        }
        // Remaining keys (ObjectType, TransformMatrix, ...) are ignored.
    }
    if (h.data_file.empty()) throw format_error("header missing ElementDataFile: " + path);
    if (!have_dims) throw format_error("header missing DimSize: " + path);
    if (!have_type) throw format_error("header missing ElementType: " + path);
    if (!have_spacing) throw format_error("header missing ElementSpacing: " + path);
    if (h.dims.x <= 0 || h.dims.y <= 0 || h.dims.z <= 0)
        throw format_error("non-positive DimSize in " + path);
    if (h.spacing.x <= 0 || h.spacing.y <= 0 || h.spacing.z <= 0)
        throw format_error("non-positive ElementSpacing in " + path);
    if (header_end) *header_end = size_t(in.tellg());
    return h;
}

// Loads the voxel payload as float, whatever the on-disk element type.
inline array3d<float> read_metaimage(const std::string& path, metaimage_header& h) {
    size_t header_end = 0;
    h = read_metaimage_header(path, &header_end);

    namespace fs = std::filesystem;
    std::string data_path = path;
    size_t offset = h.header_size;
    if (h.data_file == "LOCAL") {
        offset += header_end;
    } else {
        data_path = (fs::path(path).parent_path() / h.data_file).string();
    }

    std::ifstream in(data_path, std::ios::binary);
    if (!in) throw format_error("cannot open MetaImage data: " + data_path);
    in.seekg(0, std::ios::end);
    const size_t file_size = size_t(in.tellg());
    const size_t voxels = size_t(h.dims.x) * h.dims.y * h.dims.z;
    const size_t need = voxels * element_bytes(h.type);
    if (file_size < offset + need)
        throw integrity_error("raw data too short for declared DimSize: " + data_path);
    in.seekg(std::streamoff(offset));

    std::vector<char> buf(need);
    if (!in.read(buf.data(), std::streamsize(need)))
        throw integrity_error("failed reading raw data: " + data_path);
    if (h.msb) detail::byte_swap(buf, element_bytes(h.type));

    array3d<float> out(h.dims.x, h.dims.y, h.dims.z);
    float* dst = out.data();
    auto convert = [&](auto* src) {
        for (size_t i = 0; i < voxels; ++i) dst[i] = float(src[i]);
    };
    switch (h.type) {
        case element_type::u8: convert(reinterpret_cast<const uint8_t*>(buf.data())); break;
        case element_type::i8: convert(reinterpret_cast<const int8_t*>(buf.data())); break;
        case element_type::i16: convert(reinterpret_cast<const int16_t*>(buf.data())); break;
        case element_type::u16: convert(reinterpret_cast<const uint16_t*>(buf.data())); break;
        case element_type::i32: convert(reinterpret_cast<const int32_t*>(buf.data())); break;
        case element_type::u32: convert(reinterpret_cast<const uint32_t*>(buf.data())); break;
        case element_type::f32: convert(reinterpret_cast<const float*>(buf.data())); break;
        case element_type::f64: convert(reinterpret_cast<const double*>(buf.data())); break;
    }
    return out;
}

// Writes an int16 volume as sibling .mhd/.raw files. `path` names the header.
inline void write_metaimage_i16(const std::string& path, const array3d<int16_t>& v,
                                vec3d spacing, vec3d origin) {
    namespace fs = std::filesystem;
    fs::path hdr(path);
    fs::path raw = hdr;
    raw.replace_extension(".raw");

    std::ofstream out(hdr, std::ios::binary);
    if (!out) throw format_error("cannot write MetaImage header: " + path);
    out << "ObjectType = Image\n"
        << "NDims = 3\n"
        << "BinaryData = True\n"
        << "BinaryDataByteOrderMSB = False\n"
        << "CompressedData = False\n"
        << "TransformMatrix = 1 0 0 0 1 0 0 0 1\n"
        << "Offset = " << origin.x << " " << origin.y << " " << origin.z << "\n"
        << "ElementSpacing = " << spacing.x << " " << spacing.y << " " << spacing.z << "\n"
        << "DimSize = " << v.nx() << " " << v.ny() << " " << v.nz() << "\n"
        << "ElementType = MET_SHORT\n"
        << "ElementDataFile = " << raw.filename().string() << "\n";

    std::ofstream rout(raw, std::ios::binary);
    if (!rout) throw format_error("cannot write MetaImage data: " + raw.string());
    rout.write(reinterpret_cast<const char*>(v.data()),
               std::streamsize(v.size() * sizeof(int16_t)));
}

}  // namespace mipcad::io
