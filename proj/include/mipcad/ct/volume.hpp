#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"
#include "mipcad/io/metaimage.hpp"

namespace mipcad {

// CT intensity window used for normalization, in Hounsfield units.
constexpr float hu_window_low = -1000.f;
constexpr float hu_window_high = 400.f;

// Scans thicker than this were excluded from the reference dataset and the
// pipeline refuses them as well.
constexpr double max_z_spacing_mm = 2.5;

// A 3-D intensity grid with physical placement. Voxels hold HU straight
// after loading and values in [0,1] after normalize_hu.
struct ct_volume {
    array3d<float> voxels;
    vec3d spacing{1, 1, 1};  // mm per voxel, all components > 0
    vec3d origin{0, 0, 0};   // world mm of voxel (0,0,0)
    std::string series_id;

    int nx() const { return voxels.nx(); }
    int ny() const { return voxels.ny(); }
    int nz() const { return voxels.nz(); }
};

inline vec3d world_to_voxel(const ct_volume& v, vec3d p) {
    return {(p.x - v.origin.x) / v.spacing.x,
            (p.y - v.origin.y) / v.spacing.y,
            (p.z - v.origin.z) / v.spacing.z};
}

inline vec3d voxel_to_world(const ct_volume& v, vec3d idx) {
    return {v.origin.x + idx.x * v.spacing.x,
            v.origin.y + idx.y * v.spacing.y,
            v.origin.z + idx.z * v.spacing.z};
}

// Loads a MetaImage volume; voxels are HU. The series id is the header
// file's stem, matching how the benchmark names its scans.
inline ct_volume load_volume(const std::string& path) {
    io::metaimage_header h;
    ct_volume v;
    v.voxels = io::read_metaimage(path, h);
    v.spacing = h.spacing;
    v.origin = h.origin;
    v.series_id = std::filesystem::path(path).stem().string();
    if (v.spacing.z > max_z_spacing_mm)
        throw geometry_error("slice spacing " + std::to_string(v.spacing.z) +
                             " mm exceeds supported maximum of 2.5 mm: " + path);
    return v;
}

// clamp((hu + 1000) / 1400, 0, 1). Total on any input.
inline ct_volume normalize_hu(ct_volume v) {
    const float span = hu_window_high - hu_window_low;
    for (float& x : v.voxels.raw())
        x = std::clamp((x - hu_window_low) / span, 0.f, 1.f);
    return v;
}

// Linear interpolation along z onto a 1 mm grid. x/y spacing and the origin
// are unchanged; the new slice count is round(old_count * old_z_spacing).
// Sample positions past the last source slice clamp to it.
inline ct_volume resample_z(const ct_volume& v) {
    if (v.spacing.z <= 0) throw contract_error("non-positive z spacing");
    if (v.nz() < 2) throw geometry_error("cannot resample a single-slice volume");

    const int old_nz = v.nz();
    const int new_nz = int(std::llround(double(old_nz) * v.spacing.z));
    ct_volume out;
    out.spacing = {v.spacing.x, v.spacing.y, 1.0};
    out.origin = v.origin;
    out.series_id = v.series_id;
    out.voxels = array3d<float>(v.nx(), v.ny(), new_nz);

    const size_t plane = size_t(v.nx()) * v.ny();
    for (int k = 0; k < new_nz; ++k) {
        const double zsrc = double(k) / v.spacing.z;  // source index space
        int z0 = int(std::floor(zsrc));
        double frac = zsrc - z0;
        if (z0 >= old_nz - 1) {
            z0 = old_nz - 1;
            frac = 0.0;
        }
        const float* a = v.voxels.slice(z0);
        const float* b = v.voxels.slice(frac > 0.0 ? z0 + 1 : z0);
        float* dst = out.voxels.slice(k);
        const float w = float(frac);
        if (w == 0.f) {
            std::copy(a, a + plane, dst);
        } else {
            for (size_t i = 0; i < plane; ++i) dst[i] = a[i] + w * (b[i] - a[i]);
        }
    }
    return out;
}

}  // namespace mipcad
