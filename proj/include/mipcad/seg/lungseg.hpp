#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"
#include "mipcad/ct/volume.hpp"
#include "mipcad/seg/morphology.hpp"

namespace mipcad {

struct lungseg_params {
    int closing_radius_px = 5;   // per-slice closing, keeps juxta-pleural wall
    int dilation_radius_px = 3;  // extra boundary margin after closing
    int min_component_px = 8;    // in-slice speckle cleanup threshold
};

struct lung_mask {
    array3d<uint8_t> mask;          // 1 inside parenchyma (after boundary growth)
    double volume_fraction = 0.0;   // set voxels / total voxels
};

// Parenchyma segmentation on a normalized volume:
//   1. threshold at the global mean (air below, tissue above)
//   2. per slice: drop air connected to the border, 4-connected cleanup
//   3. keep the two largest 3-D air components (the lungs)
//   4. per slice: closing then dilation to keep wall-attached nodules
//   5. per slice: fill holes (vessels inside the cavity)
inline lung_mask segment_lungs(const ct_volume& v, const lungseg_params& p = {}) {
    if (v.voxels.empty()) throw contract_error("segment_lungs: empty volume");

    const float mean = float(
        std::accumulate(v.voxels.raw().begin(), v.voxels.raw().end(), 0.0) / v.voxels.size());

    const int nx = v.nx(), ny = v.ny(), nz = v.nz();
    array3d<uint8_t> air(nx, ny, nz);
    for (int z = 0; z < nz; ++z) {
        array2d<uint8_t> s(nx, ny);
        const float* src = v.voxels.slice(z);
        for (size_t i = 0; i < s.size(); ++i) s.data()[i] = src[i] < mean ? 1 : 0;
        remove_border_connected(s);
        remove_small_components(s, p.min_component_px);
        std::copy(s.data(), s.data() + s.size(), air.slice(z));
    }

    std::vector<size_t> sizes;
    auto labels = label_components_3d(air, sizes);
    if (sizes.empty())
        throw segmentation_error(
            "no lung candidate component (threshold " + std::to_string(mean) +
            ", air voxels 0 after cleanup)");

    // Indices of the two largest components.
    int first = 0, second = -1;
    for (int i = 1; i < int(sizes.size()); ++i)
        if (sizes[i] > sizes[first]) {
            second = first;
            first = i;
        } else if (second < 0 || sizes[i] > sizes[second]) {
            second = i;
        }
    const int keep_a = first + 1;
    const int keep_b = second >= 0 ? second + 1 : -1;

    lung_mask out;
    out.mask = array3d<uint8_t>(nx, ny, nz, 0);
    for (size_t i = 0; i < labels.size(); ++i) {
        const int l = labels.data()[i];
        if (l == keep_a || l == keep_b) out.mask.data()[i] = 1;
    }

    for (int z = 0; z < nz; ++z) {
        auto s = out.mask.slice_copy(z);
        s = close_disk(s, p.closing_radius_px);
        s = dilate_disk(s, p.dilation_radius_px);
        fill_holes(s);
        std::copy(s.data(), s.data() + s.size(), out.mask.slice(z));
    }

    size_t set = 0;
    for (uint8_t b : out.mask.raw()) set += b;
    out.volume_fraction = double(set) / double(out.mask.size());
    return out;
}

// Zeroes voxels outside the mask; inside voxels pass through bit-exactly.
inline ct_volume apply_mask(const ct_volume& v, const lung_mask& m) {
    if (!same_shape(v.voxels, m.mask))
        throw contract_error("apply_mask: volume and mask shapes differ");
    ct_volume out = v;
    const uint8_t* mk = m.mask.data();
    float* px = out.voxels.data();
    for (size_t i = 0; i < out.voxels.size(); ++i)
        if (!mk[i]) px[i] = 0.f;
    return out;
}

}  // namespace mipcad
