#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mipcad/core/error.hpp"
#include "mipcad/nn/cubenet3d.hpp"
#include "mipcad/nn/unet2d.hpp"

namespace mipcad::nn {

// Model artifact: magic, format version, a JSON architecture descriptor, then
// each state vector as a named float32 blob. A loaded descriptor rebuilds the
// network before the blobs are matched by order, name, and size.

inline constexpr char net_magic[8] = {'M', 'C', 'A', 'D', 'N', 'E', 'T', '\n'};

namespace detail {

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw format_error("model artifact truncated");
    return v;
}

template <typename Net>
void write_net(std::ostream& os, Net& net, const nlohmann::json& arch) {
    os.write(net_magic, sizeof(net_magic));
    put<uint32_t>(os, 1u);
    const std::string j = arch.dump();
    put<uint32_t>(os, uint32_t(j.size()));
    os.write(j.data(), std::streamsize(j.size()));
    auto blocks = net.state();
    put<uint32_t>(os, uint32_t(blocks.size()));
    for (const auto& b : blocks) {
        const std::string name = b.name;
        put<uint32_t>(os, uint32_t(name.size()));
        os.write(name.data(), std::streamsize(name.size()));
        put<uint64_t>(os, uint64_t(b.value->size()));
        os.write(reinterpret_cast<const char*>(b.value->data()),
                 std::streamsize(b.value->size() * sizeof(float)));
    }
    if (!os) throw format_error("model artifact write failed");
}

inline nlohmann::json read_header(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, net_magic, sizeof(magic)) != 0)
        throw format_error("not a model artifact");
    const uint32_t version = get<uint32_t>(is);
    if (version != 1) throw format_error("unsupported model artifact version");
    const uint32_t jlen = get<uint32_t>(is);
    std::string j(jlen, '\0');
    is.read(j.data(), std::streamsize(jlen));
    if (!is) throw format_error("model artifact truncated");
    nlohmann::json arch = nlohmann::json::parse(j, nullptr, false);
    if (arch.is_discarded()) throw format_error("model artifact descriptor is not valid JSON");
    return arch;
}

template <typename Net>
void read_blobs(std::istream& is, Net& net) {
    auto blocks = net.state();
    const uint32_t n = get<uint32_t>(is);
    if (n != blocks.size()) throw format_error("model artifact block count mismatch");
    for (auto& b : blocks) {
        const uint32_t nlen = get<uint32_t>(is);
        std::string name(nlen, '\0');
        is.read(name.data(), std::streamsize(nlen));
        if (!is || name != b.name) throw format_error("model artifact block name mismatch");
        const uint64_t count = get<uint64_t>(is);
        if (count != b.value->size()) throw format_error("model artifact block size mismatch");
        is.read(reinterpret_cast<char*>(b.value->data()),
                std::streamsize(count * sizeof(float)));
        if (!is) throw format_error("model artifact truncated");
    }
}

}  // namespace detail

inline void save_unet(const std::filesystem::path& path, unet2d& net, int slab_thickness_mm) {
    nlohmann::json arch;
    arch["kind"] = "unet2d";
    arch["base_width"] = net.base_width();
    arch["slab_thickness_mm"] = slab_thickness_mm;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error("cannot write " + path.string());
    detail::write_net(os, net, arch);
}

struct loaded_unet {
    unet2d net;
    int slab_thickness_mm = 0;
};

inline loaded_unet load_unet(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error("cannot read " + path.string());
    const nlohmann::json arch = detail::read_header(is);
    if (arch.value("kind", "") != std::string("unet2d"))
        throw format_error("model artifact is not a 2-D detector");
    loaded_unet out{unet2d(arch.at("base_width").get<int>()),
                    arch.value("slab_thickness_mm", 0)};
    detail::read_blobs(is, out.net);
    return out;
}

inline void save_cubenet(const std::filesystem::path& path, cube_net3d& net, int width_divisor,
                         int dense_width) {
    nlohmann::json arch;
    arch["kind"] = "cube3d";
    arch["side"] = net.side();
    arch["width_divisor"] = width_divisor;
    arch["dense_width"] = dense_width;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error("cannot write " + path.string());
    detail::write_net(os, net, arch);
}

inline cube_net3d load_cubenet(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error("cannot read " + path.string());
    const nlohmann::json arch = detail::read_header(is);
    if (arch.value("kind", "") != std::string("cube3d"))
        throw format_error("model artifact is not a 3-D classifier");
    cube_net3d net(cube_net_spec::for_side(arch.at("side").get<int>()), 0,
                   arch.value("width_divisor", 1), arch.value("dense_width", 128));
    detail::read_blobs(is, net);
    return net;
}

}  // namespace mipcad::nn
