#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"
#include "mipcad/ct/volume.hpp"

namespace mipcad {

// Sliding-slab projection stack for one slab thickness. One image per 1 mm
// z position; image k is the per-pixel max over slices
// [k - floor(t/2), k + ceil(t/2) - 1], truncated at the volume edges.
struct mip_stack {
    std::vector<array2d<float>> images;
    int slab_thickness_mm = 1;
    std::vector<double> z_centers;  // world mm of slab centers
    std::string series_id;
    vec3d spacing{1.0, 1.0, 1.0};  // source geometry, for label/world mapping
    vec3d origin{0.0, 0.0, 0.0};

    // z index range covered by the slab of output k, clipped at the edges.
    std::pair<int, int> slab_range(int k) const {
        const int t = slab_thickness_mm;
        const int nz = int(images.size());
        return {std::max(0, k - t / 2), std::min(nz - 1, k + (t + 1) / 2 - 1)};
    }
};

namespace detail {

// van Herk / Gil-Werman max filter: out[i] = max(in[i .. i+w-1]),
// amortized O(1) per element. in has n values, out gets n-w+1.
inline void window_max(const float* in, int n, int w, float* out) {
    const int n_out = n - w + 1;
    if (w == 1) {
        std::copy(in, in + n, out);
        return;
    }
    // Block-aligned prefix maxima R and suffix maxima L.
    static thread_local std::vector<float> rbuf, lbuf;
    rbuf.resize(size_t(n));
    lbuf.resize(size_t(n));
    for (int b = 0; b < n; b += w) {
        const int e = std::min(b + w, n);
        rbuf[b] = in[b];
        for (int i = b + 1; i < e; ++i) rbuf[i] = std::max(rbuf[i - 1], in[i]);
        lbuf[e - 1] = in[e - 1];
        for (int i = e - 2; i >= b; --i) lbuf[i] = std::max(lbuf[i + 1], in[i]);
    }
    for (int i = 0; i < n_out; ++i) out[i] = std::max(lbuf[i], rbuf[i + w - 1]);
}

}  // namespace detail

inline mip_stack build_mip_stack(const ct_volume& v, int slab_thickness_mm) {
    if (slab_thickness_mm < 1)
        throw parameter_error("slab thickness must be a positive integer mm");
    if (v.spacing.z != 1.0)
        throw contract_error("build_mip_stack requires a 1 mm z-resampled volume");

    const int nx = v.nx(), ny = v.ny(), nz = v.nz();
    const int t = slab_thickness_mm;
    const int lo = t / 2;        // slices below the center
    const int hi = (t + 1) / 2;  // slices at/above, window = [k-lo, k+hi-1]

    mip_stack out;
    out.slab_thickness_mm = t;
    out.series_id = v.series_id;
    out.spacing = v.spacing;
    out.origin = v.origin;
    out.images.assign(size_t(nz), array2d<float>(nx, ny));
    out.z_centers.resize(size_t(nz));
    for (int k = 0; k < nz; ++k) out.z_centers[k] = v.origin.z + k;

    const float neg_inf = -std::numeric_limits<float>::infinity();
    const int padded = nz + t - 1;  // -inf padding makes edge slabs truncate
    std::vector<float> col(size_t(padded), neg_inf);
    std::vector<float> res(static_cast<size_t>(nz));
    const size_t zstride = size_t(nx) * ny;

    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            const float* src = &v.voxels(x, y, 0);
            for (int z = 0; z < nz; ++z) col[size_t(lo + z)] = src[size_t(z) * zstride];
            detail::window_max(col.data(), padded, t, res.data());
            for (int k = 0; k < nz; ++k) out.images[size_t(k)](x, y) = res[size_t(k)];
        }
    }
    return out;
}

}  // namespace mipcad
