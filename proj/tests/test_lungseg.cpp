#include "catch_amalgamated.hpp"

#include <random>
#include <vector>

#include "mipcad/seg/lungseg.hpp"
#include "mipcad/seg/morphology.hpp"

using namespace mipcad;

namespace {

// Phantom in normalized intensity: dark background (0), bright body disk
// (0.8), two dark ellipsoids (0.05) inside the body.
struct phantom_geom {
    ct_volume v;
    array3d<uint8_t> lungs;  // ground-truth ellipsoid voxels
};

phantom_geom make_phantom(int nx = 48, int ny = 48, int nz = 14, bool with_hole = false) {
    phantom_geom g;
    g.v.voxels = array3d<float>(nx, ny, nz, 0.f);
    g.lungs = array3d<uint8_t>(nx, ny, nz, 0);
    const double cx = nx / 2.0, cy = ny / 2.0, cz = nz / 2.0;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const double bx = (x - cx) / (nx * 0.42), by = (y - cy) / (ny * 0.42),
                             bz = (z - cz) / (nz * 0.48);
                if (bx * bx + by * by + bz * bz <= 1.0) g.v.voxels(x, y, z) = 0.8f;
            }
    const auto ellipsoid = [&](double ex, double rx, double ry, double rz) {
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y)
                for (int x = 0; x < nx; ++x) {
                    const double dx = (x - ex) / rx, dy = (y - cy) / ry, dz = (z - cz) / rz;
                    if (dx * dx + dy * dy + dz * dz <= 1.0) {
                        g.v.voxels(x, y, z) = 0.05f;
                        g.lungs(x, y, z) = 1;
                    }
                }
    };
    ellipsoid(cx - nx * 0.2, nx * 0.13, ny * 0.22, nz * 0.36);
    ellipsoid(cx + nx * 0.2, nx * 0.13, ny * 0.22, nz * 0.36);
    if (with_hole) {
        const int hx = int(cx - nx * 0.2), hy = int(cy), hz = int(cz);
        for (int d = 0; d < 3; ++d) g.v.voxels(hx + d, hy, hz) = 0.8f;  // bright "vessel"
    }
    return g;
}

}  // namespace

TEST_CASE("phantom lungs are covered, outside background excluded") {
    const phantom_geom g = make_phantom();
    const lung_mask m = segment_lungs(g.v);

    size_t lung_total = 0, lung_hit = 0, outside_hit = 0;
    for (int z = 0; z < g.v.nz(); ++z)
        for (int y = 0; y < g.v.ny(); ++y)
            for (int x = 0; x < g.v.nx(); ++x) {
                if (g.lungs(x, y, z)) {
                    ++lung_total;
                    if (m.mask(x, y, z)) ++lung_hit;
                } else if (g.v.voxels(x, y, z) == 0.f && m.mask(x, y, z)) {
                    // outside the body entirely
                    ++outside_hit;
                }
            }
    REQUIRE(lung_total > 0);
    CHECK(double(lung_hit) / double(lung_total) >= 0.95);
    CHECK(outside_hit == 0);
    CHECK(m.volume_fraction > 0.0);
    CHECK(m.volume_fraction < 1.0);
}

TEST_CASE("constant volume has no lung component") {
    ct_volume v;
    v.voxels = array3d<float>(16, 16, 4, 0.5f);
    CHECK_THROWS_AS(segment_lungs(v), segmentation_error);
}

TEST_CASE("vessel hole inside a lung is filled") {
    const phantom_geom g = make_phantom(48, 48, 14, true);
    const lung_mask m = segment_lungs(g.v);
    const int hx = int(48 / 2.0 - 48 * 0.2), hy = 24, hz = 7;
    for (int d = 0; d < 3; ++d) CHECK(m.mask(hx + d, hy, hz) == 1);
}

TEST_CASE("dilation grows the mask monotonically") {
    const phantom_geom g = make_phantom();
    lungseg_params none;
    none.closing_radius_px = 0;
    none.dilation_radius_px = 0;
    const lung_mask tight = segment_lungs(g.v, none);
    const lung_mask grown = segment_lungs(g.v);
    for (size_t i = 0; i < tight.mask.size(); ++i)
        if (tight.mask.raw()[i]) REQUIRE(grown.mask.raw()[i] == 1);
    CHECK(grown.volume_fraction >= tight.volume_fraction);
}

TEST_CASE("final mask has no holes in any slice") {
    const phantom_geom g = make_phantom(48, 48, 14, true);
    const lung_mask m = segment_lungs(g.v);
    // Flood the complement from the slice border: every unset pixel must be
    // reachable, otherwise it is an enclosed hole.
    for (int z = 0; z < g.v.nz(); ++z) {
        auto s = m.mask.slice_copy(z);
        array2d<uint8_t> reach(s.nx(), s.ny(), 0);
        std::vector<std::pair<int, int>> stack;
        const auto push = [&](int x, int y) {
            if (x < 0 || y < 0 || x >= s.nx() || y >= s.ny()) return;
            if (s(x, y) || reach(x, y)) return;
            reach(x, y) = 1;
            stack.emplace_back(x, y);
        };
        for (int x = 0; x < s.nx(); ++x) {
            push(x, 0);
            push(x, s.ny() - 1);
        }
        for (int y = 0; y < s.ny(); ++y) {
            push(0, y);
            push(s.nx() - 1, y);
        }
        while (!stack.empty()) {
            const auto [x, y] = stack.back();
            stack.pop_back();
            push(x + 1, y);
            push(x - 1, y);
            push(x, y + 1);
            push(x, y - 1);
        }
        for (int y = 0; y < s.ny(); ++y)
            for (int x = 0; x < s.nx(); ++x)
                if (!s(x, y)) REQUIRE(reach(x, y) == 1);
    }
}

TEST_CASE("segmentation is deterministic") {
    const phantom_geom g = make_phantom();
    const lung_mask a = segment_lungs(g.v);
    const lung_mask b = segment_lungs(g.v);
    REQUIRE(a.mask.raw() == b.mask.raw());
}

TEST_CASE("apply_mask semantics") {
    const phantom_geom g = make_phantom();
    lung_mask all, none;
    all.mask = array3d<uint8_t>(g.v.nx(), g.v.ny(), g.v.nz(), 1);
    none.mask = array3d<uint8_t>(g.v.nx(), g.v.ny(), g.v.nz(), 0);

    const ct_volume same = apply_mask(g.v, all);
    REQUIRE(same.voxels.raw() == g.v.voxels.raw());

    const ct_volume zero = apply_mask(g.v, none);
    for (float x : zero.voxels.raw()) REQUIRE(x == 0.f);

    const lung_mask m = segment_lungs(g.v);
    const ct_volume masked = apply_mask(g.v, m);
    for (size_t i = 0; i < m.mask.size(); ++i)
        if (m.mask.raw()[i])
            REQUIRE(masked.voxels.raw()[i] == g.v.voxels.raw()[i]);  // bit-exact inside

    lung_mask bad;
    bad.mask = array3d<uint8_t>(2, 2, 2, 1);
    CHECK_THROWS_AS(apply_mask(g.v, bad), contract_error);
}

TEST_CASE("morphology oracles on tiny shapes") {
    // dilate: single set pixel grows to a radius-1 disk (5 px cross).
    array2d<uint8_t> dot(7, 7, 0);
    dot(3, 3) = 1;
    const auto grown = dilate_disk(dot, 1);
    int count = 0;
    for (auto b : grown.raw()) count += b;
    CHECK(count == 5);
    CHECK(grown(3, 3) == 1);
    CHECK(grown(4, 3) == 1);
    CHECK(grown(2, 3) == 1);
    CHECK(grown(3, 4) == 1);
    CHECK(grown(3, 2) == 1);
    CHECK(grown(4, 4) == 0);  // euclidean disk, not square

    // erosion: 5x5 block, radius 1 -> centered 3x3 block.
    array2d<uint8_t> block(25, 25, 0);
    for (int y = 10; y <= 14; ++y)
        for (int x = 10; x <= 14; ++x) block(x, y) = 1;
    const auto eroded = erode_disk(block, 1);
    for (int y = 0; y < 25; ++y)
        for (int x = 0; x < 25; ++x)
            REQUIRE(eroded(x, y) == uint8_t(x >= 11 && x <= 13 && y >= 11 && y <= 13));

    // closing re-fills a 1-px slot cut through a solid square.
    array2d<uint8_t> slot(25, 25, 0);
    for (int y = 8; y <= 16; ++y)
        for (int x = 8; x <= 16; ++x) slot(x, y) = 1;
    for (int y = 8; y <= 16; ++y) slot(12, y) = 0;
    const auto closed = close_disk(slot, 2);
    for (int y = 10; y <= 14; ++y) CHECK(closed(12, y) == 1);
    CHECK(closed(2, 2) == 0);
    CHECK(closed(20, 4) == 0);
    for (size_t i = 0; i < slot.size(); ++i)
        if (slot.raw()[i]) REQUIRE(closed.raw()[i] == 1);  // closing is extensive

    // fill_holes: donut interior becomes set.
    array2d<uint8_t> donut(7, 7, 0);
    for (int y = 1; y < 6; ++y)
        for (int x = 1; x < 6; ++x) donut(x, y) = 1;
    donut(3, 3) = 0;
    fill_holes(donut);
    CHECK(donut(3, 3) == 1);

    // remove_border_connected: only the border-touching blob disappears.
    array2d<uint8_t> two(8, 8, 0);
    two(0, 0) = 1;
    two(1, 0) = 1;
    two(4, 4) = 1;
    two(4, 5) = 1;
    remove_border_connected(two);
    CHECK(two(0, 0) == 0);
    CHECK(two(1, 0) == 0);
    CHECK(two(4, 4) == 1);
    CHECK(two(4, 5) == 1);
}
