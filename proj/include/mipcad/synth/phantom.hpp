#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mipcad/core/array.hpp"
#include "mipcad/ct/annotations.hpp"
#include "mipcad/ct/volume.hpp"
#include "mipcad/io/metaimage.hpp"

namespace mipcad {

// Synthetic chest phantom: an air background, a soft-tissue body ellipsoid,
// two low-density lung ellipsoids, bright nodule spheres, and tube-shaped
// vessel distractors of similar brightness. Values are Hounsfield units.
struct phantom_params {
    int nx = 64, ny = 64, nz = 40;
    vec3d spacing{1.0, 1.0, 1.0};
    vec3d origin{0.0, 0.0, 0.0};
    int n_nodules = 2;
    int n_tubes = 3;
    double min_diameter_px = 4.0;
    double max_diameter_px = 12.0;
    double body_hu = 20.0;
    double lung_hu = -880.0;
    double nodule_hu = 30.0;
    double tube_hu = -60.0;
    double noise_hu = 12.0;
    uint64_t seed = 1;
};

struct phantom {
    ct_volume volume;
    std::vector<nodule_annotation> nodules;
};

namespace detail {

struct ellipsoid {
    vec3d c, semi;
    bool contains(double x, double y, double z, double shrink = 1.0) const {
        const double dx = (x - c.x) / (semi.x * shrink);
        const double dy = (y - c.y) / (semi.y * shrink);
        const double dz = (z - c.z) / (semi.z * shrink);
        return dx * dx + dy * dy + dz * dz <= 1.0;
    }
};

inline void paint_sphere(array3d<float>& vox, const vec3d& c, double r, float hu) {
    const int x0 = std::max(0, int(std::floor(c.x - r))), x1 = std::min(vox.nx() - 1, int(std::ceil(c.x + r)));
    const int y0 = std::max(0, int(std::floor(c.y - r))), y1 = std::min(vox.ny() - 1, int(std::ceil(c.y + r)));
    const int z0 = std::max(0, int(std::floor(c.z - r))), z1 = std::min(vox.nz() - 1, int(std::ceil(c.z + r)));
    for (int z = z0; z <= z1; ++z)
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - c.x, dy = y - c.y, dz = z - c.z;
                if (dx * dx + dy * dy + dz * dz <= r * r) vox(x, y, z) = hu;
            }
}

inline void paint_tube(array3d<float>& vox, const vec3d& a, const vec3d& b, double radius,
                       float hu) {
    const int x0 = std::max(0, int(std::floor(std::min(a.x, b.x) - radius)));
    const int x1 = std::min(vox.nx() - 1, int(std::ceil(std::max(a.x, b.x) + radius)));
    const int y0 = std::max(0, int(std::floor(std::min(a.y, b.y) - radius)));
    const int y1 = std::min(vox.ny() - 1, int(std::ceil(std::max(a.y, b.y) + radius)));
    const int z0 = std::max(0, int(std::floor(std::min(a.z, b.z) - radius)));
    const int z1 = std::min(vox.nz() - 1, int(std::ceil(std::max(a.z, b.z) + radius)));
    const vec3d ab{b.x - a.x, b.y - a.y, b.z - a.z};
    const double len2 = ab.x * ab.x + ab.y * ab.y + ab.z * ab.z;
    for (int z = z0; z <= z1; ++z)
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const vec3d ap{x - a.x, y - a.y, z - a.z};
                double t = len2 > 0 ? (ap.x * ab.x + ap.y * ab.y + ap.z * ab.z) / len2 : 0;
                t = std::clamp(t, 0.0, 1.0);
                const double dx = ap.x - t * ab.x, dy = ap.y - t * ab.y, dz = ap.z - t * ab.z;
                if (dx * dx + dy * dy + dz * dz <= radius * radius) vox(x, y, z) = hu;
            }
}

}  // namespace detail

inline phantom make_phantom(const phantom_params& p, const std::string& series_id) {
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    phantom out;
    out.volume.series_id = series_id;
    out.volume.spacing = p.spacing;
    out.volume.origin = p.origin;
    out.volume.voxels = array3d<float>(p.nx, p.ny, p.nz);
    auto& vox = out.volume.voxels;
    vox.raw().assign(vox.raw().size(), -1000.f);

    const detail::ellipsoid body{{p.nx / 2.0, p.ny / 2.0, p.nz / 2.0},
                                 {0.46 * p.nx, 0.44 * p.ny, 0.50 * p.nz}};
    const detail::ellipsoid lungs[2] = {
        {{0.32 * p.nx, 0.50 * p.ny, 0.50 * p.nz}, {0.16 * p.nx, 0.30 * p.ny, 0.42 * p.nz}},
        {{0.68 * p.nx, 0.50 * p.ny, 0.50 * p.nz}, {0.16 * p.nx, 0.30 * p.ny, 0.42 * p.nz}}};
    for (int z = 0; z < p.nz; ++z)
        for (int y = 0; y < p.ny; ++y)
            for (int x = 0; x < p.nx; ++x) {
                if (body.contains(x, y, z)) vox(x, y, z) = float(p.body_hu);
                for (const auto& l : lungs)
                    if (l.contains(x, y, z)) vox(x, y, z) = float(p.lung_hu);
            }

    // Vessel-like distractors, each fully inside one lung.
    for (int i = 0; i < p.n_tubes; ++i) {
        const auto& l = lungs[rng() % 2];
        const vec3d c{l.c.x + (unit(rng) - 0.5) * l.semi.x, l.c.y + (unit(rng) - 0.5) * l.semi.y,
                      l.c.z + (unit(rng) - 0.5) * l.semi.z};
        double dx = unit(rng) - 0.5, dy = unit(rng) - 0.5, dz = unit(rng) - 0.5;
        const double n = std::max(1e-6, std::sqrt(dx * dx + dy * dy + dz * dz));
        const double half = 8.0 + 8.0 * unit(rng);
        dx *= half / n;
        dy *= half / n;
        dz *= half / n;
        detail::paint_tube(vox, {c.x - dx, c.y - dy, c.z - dz}, {c.x + dx, c.y + dy, c.z + dz},
                           1.2 + 0.8 * unit(rng), float(p.tube_hu));
    }

    // Nodules, kept off the lung wall and away from each other.
    for (int i = 0; i < p.n_nodules; ++i) {
        const double d = p.min_diameter_px + (p.max_diameter_px - p.min_diameter_px) * unit(rng);
        vec3d c;
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            const auto& l = lungs[rng() % 2];
            c = {l.c.x + (unit(rng) * 2 - 1) * l.semi.x * 0.55,
                 l.c.y + (unit(rng) * 2 - 1) * l.semi.y * 0.55,
                 l.c.z + (unit(rng) * 2 - 1) * l.semi.z * 0.55};
            placed = true;
            for (const auto& prev : out.nodules) {
                const vec3d w = voxel_to_world(out.volume, c);
                const vec3d dd{w.x - prev.center_world.x, w.y - prev.center_world.y,
                               w.z - prev.center_world.z};
                if (length(dd) < (d + prev.diameter_mm) * 1.5) placed = false;
            }
        }
        if (!placed) continue;
        detail::paint_sphere(vox, c, d / 2.0, float(p.nodule_hu));
        nodule_annotation a;
        a.series_id = series_id;
        a.center_world = voxel_to_world(out.volume, c);
        a.diameter_mm = d * p.spacing.x;
        out.nodules.push_back(a);
    }

    if (p.noise_hu > 0) {
        std::normal_distribution<double> noise(0.0, p.noise_hu);
        for (float& v : vox.raw()) v = float(std::clamp(double(v) + noise(rng), -1024.0, 400.0));
    }
    return out;
}

// Writes n phantom volumes plus one annotations.csv into dir; returns the
// series ids. Volumes vary in nodule/distractor counts with the seed.
inline std::vector<std::string> write_mini_dataset(const std::filesystem::path& dir, int n_volumes,
                                                   uint64_t base_seed,
                                                   phantom_params base = phantom_params{}) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> ids;
    std::vector<nodule_annotation> all;
    for (int i = 0; i < n_volumes; ++i) {
        phantom_params p = base;
        p.seed = base_seed + uint64_t(i) * 7919;
        p.n_nodules = 1 + int((base_seed + i) % 3);
        p.n_tubes = 2 + int((base_seed + 2 * i) % 3);
        p.origin = {-double(p.nx) / 2, -double(p.ny) / 2, 10.0 * i};
        char name[32];
        std::snprintf(name, sizeof(name), "synth%03d", i);
        const phantom ph = make_phantom(p, name);
        array3d<int16_t> iv(p.nx, p.ny, p.nz);
        for (size_t k = 0; k < iv.raw().size(); ++k)
            iv.raw()[k] = int16_t(std::lround(ph.volume.voxels.raw()[k]));
        io::write_metaimage_i16((dir / (std::string(name) + ".mhd")).string(), iv, p.spacing,
                            p.origin);
        all.insert(all.end(), ph.nodules.begin(), ph.nodules.end());
        ids.emplace_back(name);
    }
    write_annotations_csv((dir / "annotations.csv").string(), all);
    return ids;
}

}  // namespace mipcad
