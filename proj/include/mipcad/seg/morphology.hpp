#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "mipcad/core/array.hpp"

// Binary morphology on axial slices plus 3-D component labeling.
// Disk dilation/erosion use the exact squared Euclidean distance transform
// (Felzenszwalb-Huttenlocher), so a pixel is dilated iff its squared
// distance to the mask is <= r*r - identical to stamping a discrete disk.

namespace mipcad {

namespace detail {

constexpr double edt_far = 1e12;

// 1-D lower envelope of parabolas; d[q] = min_p (q-p)^2 + f[p].
inline void edt_1d(const double* f, double* d, int* v, double* z, int n) {
    int k = 0;
    v[0] = 0;
    z[0] = -edt_far;
    z[1] = edt_far;
    for (int q = 1; q < n; ++q) {
        double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) /
                   (2.0 * q - 2.0 * v[k]);
        while (s <= z[k]) {
            --k;
            s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) /
                (2.0 * q - 2.0 * v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = edt_far;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        d[q] = (double(q) - v[k]) * (double(q) - v[k]) + f[v[k]];
    }
}

// Squared distance of every pixel to the nearest set pixel.
inline std::vector<double> edt_sq_2d(const array2d<uint8_t>& m) {
    const int nx = m.nx(), ny = m.ny();
    std::vector<double> d(size_t(nx) * ny);
    std::vector<double> f(std::max(nx, ny)), g(std::max(nx, ny)), z(size_t(std::max(nx, ny)) + 1);
    std::vector<int> v(std::max(nx, ny));

    for (int x = 0; x < nx; ++x) {  // columns
        for (int y = 0; y < ny; ++y) f[y] = m(x, y) ? 0.0 : edt_far;
        edt_1d(f.data(), g.data(), v.data(), z.data(), ny);
        for (int y = 0; y < ny; ++y) d[size_t(y) * nx + x] = g[y];
    }
    for (int y = 0; y < ny; ++y) {  // rows
        for (int x = 0; x < nx; ++x) f[x] = d[size_t(y) * nx + x];
        edt_1d(f.data(), g.data(), v.data(), z.data(), nx);
        for (int x = 0; x < nx; ++x) d[size_t(y) * nx + x] = g[x];
    }
    return d;
}

}  // namespace detail

inline array2d<uint8_t> dilate_disk(const array2d<uint8_t>& m, int radius) {
    if (radius <= 0) return m;
    auto d = detail::edt_sq_2d(m);
    array2d<uint8_t> out(m.nx(), m.ny());
    const double r2 = double(radius) * radius;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = d[i] <= r2 ? 1 : 0;
    return out;
}

inline array2d<uint8_t> erode_disk(const array2d<uint8_t>& m, int radius) {
    if (radius <= 0) return m;
    array2d<uint8_t> inv(m.nx(), m.ny());
    for (size_t i = 0; i < m.size(); ++i) inv.data()[i] = m.data()[i] ? 0 : 1;
    auto d = detail::edt_sq_2d(inv);
    array2d<uint8_t> out(m.nx(), m.ny());
    const double r2 = double(radius) * radius;
    for (size_t i = 0; i < out.size(); ++i)
        out.data()[i] = (m.data()[i] && d[i] > r2) ? 1 : 0;
    return out;
}

inline array2d<uint8_t> close_disk(const array2d<uint8_t>& m, int radius) {
    return erode_disk(dilate_disk(m, radius), radius);
}

// Clears every 4-connected set component that touches the slice border.
inline void remove_border_connected(array2d<uint8_t>& m) {
    const int nx = m.nx(), ny = m.ny();
    std::vector<std::pair<int, int>> stack;
    auto push = [&](int x, int y) {
        if (m(x, y)) {
            m(x, y) = 0;
            stack.emplace_back(x, y);
        }
    };
    for (int x = 0; x < nx; ++x) {
        push(x, 0);
        push(x, ny - 1);
    }
    for (int y = 0; y < ny; ++y) {
        push(0, y);
        push(nx - 1, y);
    }
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        if (x > 0) push(x - 1, y);
        if (x + 1 < nx) push(x + 1, y);
        if (y > 0) push(x, y - 1);
        if (y + 1 < ny) push(x, y + 1);
    }
}

// Removes 4-connected components smaller than min_area pixels.
inline void remove_small_components(array2d<uint8_t>& m, int min_area) {
    if (min_area <= 1) return;
    const int nx = m.nx(), ny = m.ny();
    array2d<uint8_t> seen(nx, ny, 0);
    std::vector<std::pair<int, int>> comp, stack;
    for (int y0 = 0; y0 < ny; ++y0)
        for (int x0 = 0; x0 < nx; ++x0) {
            if (!m(x0, y0) || seen(x0, y0)) continue;
            comp.clear();
            stack.assign(1, {x0, y0});
            seen(x0, y0) = 1;
            while (!stack.empty()) {
                auto [x, y] = stack.back();
                stack.pop_back();
                comp.emplace_back(x, y);
                auto visit = [&](int ax, int ay) {
                    if (ax >= 0 && ax < nx && ay >= 0 && ay < ny && m(ax, ay) && !seen(ax, ay)) {
                        seen(ax, ay) = 1;
                        stack.emplace_back(ax, ay);
                    }
                };
                visit(x - 1, y);
                visit(x + 1, y);
                visit(x, y - 1);
                visit(x, y + 1);
            }
            if (int(comp.size()) < min_area)
                for (auto [x, y] : comp) m(x, y) = 0;
        }
}

// Sets every unset pixel that cannot reach the border through unset pixels
// (4-connected background).
inline void fill_holes(array2d<uint8_t>& m) {
    const int nx = m.nx(), ny = m.ny();
    array2d<uint8_t> reach(nx, ny, 0);
    std::vector<std::pair<int, int>> stack;
    auto push = [&](int x, int y) {
        if (!m(x, y) && !reach(x, y)) {
            reach(x, y) = 1;
            stack.emplace_back(x, y);
        }
    };
    for (int x = 0; x < nx; ++x) {
        push(x, 0);
        push(x, ny - 1);
    }
    for (int y = 0; y < ny; ++y) {
        push(0, y);
        push(nx - 1, y);
    }
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        if (x > 0) push(x - 1, y);
        if (x + 1 < nx) push(x + 1, y);
        if (y > 0) push(x, y - 1);
        if (y + 1 < ny) push(x, y + 1);
    }
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x)
            if (!m(x, y) && !reach(x, y)) m(x, y) = 1;
}

// 26-connected 3-D component labeling. Returns labels (0 = background) and
// fills sizes[l-1] with the voxel count of label l.
inline array3d<int> label_components_3d(const array3d<uint8_t>& m, std::vector<size_t>& sizes) {
    const int nx = m.nx(), ny = m.ny(), nz = m.nz();
    array3d<int> labels(nx, ny, nz, 0);
    sizes.clear();
    std::vector<vec3i> stack;
    int next = 0;
    for (int z0 = 0; z0 < nz; ++z0)
        for (int y0 = 0; y0 < ny; ++y0)
            for (int x0 = 0; x0 < nx; ++x0) {
                if (!m(x0, y0, z0) || labels(x0, y0, z0)) continue;
                ++next;
                size_t count = 0;
                stack.assign(1, {x0, y0, z0});
                labels(x0, y0, z0) = next;
                while (!stack.empty()) {
                    auto [x, y, z] = stack.back();
                    stack.pop_back();
                    ++count;
                    for (int dz = -1; dz <= 1; ++dz)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx) {
                                const int ax = x + dx, ay = y + dy, az = z + dz;
                                if ((dx | dy | dz) == 0 || !m.in_bounds(ax, ay, az)) continue;
                                if (m(ax, ay, az) && !labels(ax, ay, az)) {
                                    labels(ax, ay, az) = next;
                                    stack.push_back({ax, ay, az});
                                }
                            }
                }
                sizes.push_back(count);
            }
    return labels;
}

}  // namespace mipcad
