#pragma once

#include <cmath>
#include <iostream>
#include <vector>

#include "mipcad/core/array.hpp"
#include "mipcad/ct/annotations.hpp"
#include "mipcad/mip/mip.hpp"

namespace mipcad {

// Rasterizes nodule bounding boxes into per-slice binary maps matching a MIP
// stack. A map pixel is 1 when its world (x,y) lies inside the axis-aligned
// square of side = diameter centered on the nodule, and the slab's z interval
// intersects the nodule's z extent [center_z - d/2, center_z + d/2].
// Annotations for other series are ignored; nodules entirely outside the
// volume are skipped with a warning on stderr.
inline std::vector<array2d<uint8_t>> rasterize_labels(
    const std::vector<nodule_annotation>& anns, const mip_stack& stack) {
    const int nz = int(stack.images.size());
    const int nx = nz ? stack.images[0].nx() : 0;
    const int ny = nz ? stack.images[0].ny() : 0;
    std::vector<array2d<uint8_t>> maps(size_t(nz), array2d<uint8_t>(nx, ny));

    for (const auto& a : anns) {
        if (a.series_id != stack.series_id) continue;
        const double r = a.diameter_mm / 2.0;
        const vec3d& c = a.center_world;
        const double x_lo_w = c.x - r, x_hi_w = c.x + r;
        const double y_lo_w = c.y - r, y_hi_w = c.y + r;
        const double z_lo_w = c.z - r, z_hi_w = c.z + r;
        const double vol_x_hi = stack.origin.x + (nx - 1) * stack.spacing.x;
        const double vol_y_hi = stack.origin.y + (ny - 1) * stack.spacing.y;
        const double vol_z_hi = stack.origin.z + (nz - 1) * stack.spacing.z;
        if (x_hi_w < stack.origin.x || x_lo_w > vol_x_hi || y_hi_w < stack.origin.y ||
            y_lo_w > vol_y_hi || z_hi_w < stack.origin.z || z_lo_w > vol_z_hi) {
            std::cerr << "warning: nodule at (" << c.x << ", " << c.y << ", " << c.z
                      << ") lies outside series " << stack.series_id << ", skipped\n";
            continue;
        }

        // Pixel index window of the square; a pixel belongs when its center
        // falls inside the box.
        const int px_lo = std::max(0, int(std::ceil((x_lo_w - stack.origin.x) / stack.spacing.x)));
        const int px_hi =
            std::min(nx - 1, int(std::floor((x_hi_w - stack.origin.x) / stack.spacing.x)));
        const int py_lo = std::max(0, int(std::ceil((y_lo_w - stack.origin.y) / stack.spacing.y)));
        const int py_hi =
            std::min(ny - 1, int(std::floor((y_hi_w - stack.origin.y) / stack.spacing.y)));

        for (int k = 0; k < nz; ++k) {
            const auto [s_lo, s_hi] = stack.slab_range(k);
            const double slab_lo_w = stack.origin.z + s_lo * stack.spacing.z;
            const double slab_hi_w = stack.origin.z + s_hi * stack.spacing.z;
            if (slab_hi_w < z_lo_w || slab_lo_w > z_hi_w) continue;
            auto& m = maps[size_t(k)];
            for (int py = py_lo; py <= py_hi; ++py)
                for (int px = px_lo; px <= px_hi; ++px) m(px, py) = 1;
        }
    }
    return maps;
}

}  // namespace mipcad
