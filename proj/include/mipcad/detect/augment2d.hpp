#pragma once

#include <random>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"

namespace mipcad {

// One sampled 2-D augmentation: quarter-turn rotation, optional flips, then
// integer translation with zero fill. All-zero parameters give the identity.
struct augment_params2d {
    int rot_quarters = 0;  // counterclockwise 90-degree turns, 0..3
    bool flip_h = false;
    bool flip_v = false;
    int dx = 0;
    int dy = 0;
};

inline augment_params2d sample_augment2d(std::mt19937_64& rng, int max_translate_px) {
    augment_params2d p;
    p.rot_quarters = int(rng() % 4);
    p.flip_h = (rng() % 2) != 0;
    p.flip_v = (rng() % 2) != 0;
    std::uniform_int_distribution<int> t(-max_translate_px, max_translate_px);
    p.dx = t(rng);
    p.dy = t(rng);
    return p;
}

namespace detail {

template <typename T>
array2d<T> rot90_ccw(const array2d<T>& a) {
    array2d<T> out(a.nx(), a.ny());
    const int n = a.nx();
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) out(x, y) = a(n - 1 - y, x);
    return out;
}

}  // namespace detail

template <typename T>
array2d<T> apply_augment2d(const array2d<T>& img, const augment_params2d& p) {
    if (img.nx() != img.ny()) throw contract_error("apply_augment2d: input must be square");
    array2d<T> a = img;
    for (int i = 0; i < (p.rot_quarters & 3); ++i) a = detail::rot90_ccw(a);
    const int n = a.nx();
    if (p.flip_h) {
        array2d<T> b(n, n);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) b(x, y) = a(n - 1 - x, y);
        a = std::move(b);
    }
    if (p.flip_v) {
        array2d<T> b(n, n);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) b(x, y) = a(x, n - 1 - y);
        a = std::move(b);
    }
    if (p.dx != 0 || p.dy != 0) {
        array2d<T> b(n, n);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const int sx = x - p.dx, sy = y - p.dy;
                b(x, y) = (sx >= 0 && sx < n && sy >= 0 && sy < n) ? a(sx, sy) : T(0);
            }
        a = std::move(b);
    }
    return a;
}

}  // namespace mipcad
