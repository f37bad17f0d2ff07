#pragma once

#include <random>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"
#include "mipcad/ct/volume.hpp"
#include "mipcad/merge/candidates.hpp"

namespace mipcad {

// Cube of side `side` centered at the candidate's rounded center, taken from
// the normalized resampled volume; regions outside the volume are zero.
// The rounded center itself must be inside the volume.
inline array3d<float> extract_patch(const ct_volume& v, const candidate& c, int side) {
    const vec3i ctr = c.center_voxel;
    if (!v.voxels.in_bounds(ctr.x, ctr.y, ctr.z))
        throw contract_error("extract_patch: candidate center outside volume");
    array3d<float> p(side, side, side);
    const int x0 = ctr.x - side / 2, y0 = ctr.y - side / 2, z0 = ctr.z - side / 2;
    for (int z = 0; z < side; ++z) {
        const int vz = z0 + z;
        if (vz < 0 || vz >= v.nz()) continue;
        for (int y = 0; y < side; ++y) {
            const int vy = y0 + y;
            if (vy < 0 || vy >= v.ny()) continue;
            for (int x = 0; x < side; ++x) {
                const int vx = x0 + x;
                if (vx >= 0 && vx < v.nx()) p(x, y, z) = v.voxels(vx, vy, vz);
            }
        }
    }
    return p;
}

// Right-angle rotations about the three axes, applied in z, y, x order.
struct augment_params3d {
    int rz = 0;  // quarter turns, 0..3 each
    int ry = 0;
    int rx = 0;
};

inline augment_params3d sample_augment3d(std::mt19937_64& rng) {
    return {int(rng() % 4), int(rng() % 4), int(rng() % 4)};
}

namespace detail {

enum class cube_axis { x, y, z };

inline array3d<float> rot90_cube(const array3d<float>& a, cube_axis axis) {
    const int n = a.nx();
    array3d<float> out(n, n, n);
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                switch (axis) {
                    case cube_axis::z: out(x, y, z) = a(y, n - 1 - x, z); break;
                    case cube_axis::y: out(x, y, z) = a(n - 1 - z, y, x); break;
                    case cube_axis::x: out(x, y, z) = a(x, n - 1 - z, y); break;
                }
            }
    return out;
}

}  // namespace detail

// The label is unchanged by rotation, so only the patch transforms.
inline array3d<float> apply_augment3d(const array3d<float>& patch, const augment_params3d& p) {
    if (patch.nx() != patch.ny() || patch.nx() != patch.nz())
        throw contract_error("apply_augment3d: patch must be cubic");
    array3d<float> a = patch;
    for (int i = 0; i < (p.rz & 3); ++i) a = detail::rot90_cube(a, detail::cube_axis::z);
    for (int i = 0; i < (p.ry & 3); ++i) a = detail::rot90_cube(a, detail::cube_axis::y);
    for (int i = 0; i < (p.rx & 3); ++i) a = detail::rot90_cube(a, detail::cube_axis::x);
    return a;
}

}  // namespace mipcad
