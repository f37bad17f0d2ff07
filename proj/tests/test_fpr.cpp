#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mipcad/fpr/patch.hpp"
#include "mipcad/fpr/trainer3d.hpp"

using namespace mipcad;

namespace {

ct_volume coord_volume(int n) {
    ct_volume v;
    v.voxels = array3d<float>(n, n, n);
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) v.voxels(x, y, z) = float(x + 100 * y + 10000 * z + 7);
    v.spacing = {1, 1, 1};
    v.series_id = "s1";
    return v;
}

candidate at_voxel(int x, int y, int z, double side_px = 8.0) {
    candidate c;
    c.series_id = "s1";
    c.center = {double(x), double(y), double(z)};
    c.center_voxel = {x, y, z};
    c.world = {double(x), double(y), double(z)};
    c.bbox_side = side_px;
    c.bbox_mm = side_px;
    return c;
}

array3d<float> sphere_patch(int side, double radius, std::mt19937_64& rng) {
    array3d<float> p(side, side, side);
    std::normal_distribution<float> noise(0.05f, 0.02f);
    const double c = (side - 1) / 2.0;
    for (int z = 0; z < side; ++z)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const double d2 = (x - c) * (x - c) + (y - c) * (y - c) + (z - c) * (z - c);
                p(x, y, z) = (d2 <= radius * radius ? 0.9f : 0.0f) + noise(rng);
            }
    return p;
}

array3d<float> noise_patch(int side, std::mt19937_64& rng) {
    array3d<float> p(side, side, side);
    std::normal_distribution<float> noise(0.05f, 0.02f);
    for (auto& v : p.raw()) v = noise(rng);
    return p;
}

// Bright cylinder through the cube center along one axis: a vessel-like
// distractor with the same intensity as a nodule, telling shape apart.
array3d<float> tube_patch(int side, double radius, int axis, std::mt19937_64& rng) {
    array3d<float> p(side, side, side);
    std::normal_distribution<float> noise(0.05f, 0.02f);
    const double c = (side - 1) / 2.0;
    for (int z = 0; z < side; ++z)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const double a[3] = {double(x) - c, double(y) - c, double(z) - c};
                double d2 = 0;
                for (int i = 0; i < 3; ++i)
                    if (i != axis) d2 += a[i] * a[i];
                p(x, y, z) = (d2 <= radius * radius ? 0.9f : 0.0f) + noise(rng);
            }
    return p;
}

}  // namespace

TEST_CASE("extract_patch: interior cube starts at center - side/2") {
    const ct_volume v = coord_volume(16);
    const auto p = extract_patch(v, at_voxel(8, 8, 8), 4);
    REQUIRE(p.nx() == 4);
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                REQUIRE(p(x, y, z) == v.voxels(6 + x, 6 + y, 6 + z));
}

TEST_CASE("extract_patch: out-of-volume voxels are zero-filled") {
    const ct_volume v = coord_volume(16);
    const auto p = extract_patch(v, at_voxel(0, 0, 0), 4);
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                if (x < 2 || y < 2 || z < 2)
                    REQUIRE(p(x, y, z) == 0.f);
                else
                    REQUIRE(p(x, y, z) == v.voxels(x - 2, y - 2, z - 2));
            }
}

TEST_CASE("extract_patch: high corner pads the other octant") {
    const ct_volume v = coord_volume(16);
    const auto p = extract_patch(v, at_voxel(15, 15, 15), 4);
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                const int vx = 13 + x, vy = 13 + y, vz = 13 + z;
                if (vx > 15 || vy > 15 || vz > 15)
                    REQUIRE(p(x, y, z) == 0.f);
                else
                    REQUIRE(p(x, y, z) == v.voxels(vx, vy, vz));
            }
}

TEST_CASE("extract_patch: a center outside the volume is rejected") {
    const ct_volume v = coord_volume(16);
    REQUIRE_THROWS_AS(extract_patch(v, at_voxel(20, 8, 8), 4), contract_error);
    REQUIRE_THROWS_AS(extract_patch(v, at_voxel(8, -1, 8), 4), contract_error);
}

TEST_CASE("augment3d: zero parameters are the identity") {
    std::mt19937_64 rng(51);
    array3d<float> p(6, 6, 6);
    for (auto& v : p.raw()) v = float(rng() % 1000);
    const auto out = apply_augment3d(p, augment_params3d{});
    for (size_t i = 0; i < p.raw().size(); ++i) REQUIRE(out.raw()[i] == p.raw()[i]);
}

TEST_CASE("augment3d: each axis rotation has order four") {
    std::mt19937_64 rng(52);
    array3d<float> p(5, 5, 5);
    for (auto& v : p.raw()) v = float(rng() % 1000);
    for (const augment_params3d step : {augment_params3d{1, 0, 0}, augment_params3d{0, 1, 0},
                                        augment_params3d{0, 0, 1}}) {
        auto out = p;
        for (int i = 0; i < 4; ++i) out = apply_augment3d(out, step);
        for (size_t i = 0; i < p.raw().size(); ++i) REQUIRE(out.raw()[i] == p.raw()[i]);
    }
}

TEST_CASE("augment3d: combined parameters compose single-axis steps in z,y,x order") {
    std::mt19937_64 rng(53);
    array3d<float> p(4, 4, 4);
    for (auto& v : p.raw()) v = float(rng() % 1000);
    for (int trial = 0; trial < 20; ++trial) {
        const augment_params3d q = sample_augment3d(rng);
        const auto combined = apply_augment3d(p, q);
        auto manual = p;
        manual = apply_augment3d(manual, augment_params3d{q.rz, 0, 0});
        manual = apply_augment3d(manual, augment_params3d{0, q.ry, 0});
        manual = apply_augment3d(manual, augment_params3d{0, 0, q.rx});
        for (size_t i = 0; i < p.raw().size(); ++i) REQUIRE(combined.raw()[i] == manual.raw()[i]);
    }
}

TEST_CASE("augment3d: rotations permute values and fix the odd-side center") {
    std::mt19937_64 rng(54);
    array3d<float> p(5, 5, 5);
    for (auto& v : p.raw()) v = float(rng() % 10000);
    p(2, 2, 2) = 55555.f;
    auto sorted_ref = p.raw();
    std::sort(sorted_ref.begin(), sorted_ref.end());
    for (int trial = 0; trial < 50; ++trial) {
        const auto out = apply_augment3d(p, sample_augment3d(rng));
        auto sorted = out.raw();
        std::sort(sorted.begin(), sorted.end());
        REQUIRE(sorted == sorted_ref);
        REQUIRE(out(2, 2, 2) == 55555.f);
    }
}

TEST_CASE("augment3d: non-cubic patches are rejected") {
    array3d<float> p(4, 4, 3);
    REQUIRE_THROWS_AS(apply_augment3d(p, augment_params3d{}), contract_error);
}

TEST_CASE("labels: positive exactly up to the nodule radius") {
    const std::vector<nodule_annotation> anns{{"s1", {10.0, 10.0, 10.0}, 6.0}};
    std::vector<candidate> cands{at_voxel(12, 10, 10), at_voxel(13, 10, 10),
                                 at_voxel(14, 10, 10), at_voxel(10, 10, 10)};
    cands.push_back(at_voxel(10, 10, 10));
    cands.back().world = {13.0000001, 10.0, 10.0};
    const auto labels = label_candidates(cands, anns);
    REQUIRE(labels == std::vector<int>({1, 1, 0, 1, 0}));
}

TEST_CASE("labels: empty annotation list marks everything negative") {
    std::vector<candidate> cands{at_voxel(5, 5, 5), at_voxel(9, 9, 9)};
    const auto labels = label_candidates(cands, {});
    REQUIRE(labels == std::vector<int>({0, 0}));
}

TEST_CASE("ensemble: size routing reproduces the worked examples") {
    REQUIRE(ensemble_probability(0.5, 0.7, 12.0) == Catch::Approx(0.6333333333).margin(1e-9));
    REQUIRE(ensemble_probability(0.5, 0.7, 16.0) == Catch::Approx(0.5666666667).margin(1e-9));
    REQUIRE(ensemble_probability(0.5, 0.7, 15.999) == Catch::Approx(1.9 / 3.0).margin(1e-12));
}

TEST_CASE("ensemble: output stays between the two source probabilities") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double p2 = u(rng), p3 = u(rng), side = u(rng) * 40.0;
        const double e = ensemble_probability(p2, p3, side);
        REQUIRE(e >= std::min(p2, p3) - 1e-15);
        REQUIRE(e <= std::max(p2, p3) + 1e-15);
    }
}

TEST_CASE("train_fpr: degenerate training sets are rejected") {
    std::mt19937_64 rng(56);
    std::vector<array3d<float>> patches{noise_patch(16, rng), noise_patch(16, rng)};
    const auto spec = nn::cube_net_spec::for_side(16);
    train_config_3d cfg;
    cfg.width_divisor = 8;
    REQUIRE_THROWS_AS(train_fpr({}, {}, spec, cfg), contract_error);
    REQUIRE_THROWS_AS(train_fpr(patches, {0}, spec, cfg), contract_error);
    REQUIRE_THROWS_AS(train_fpr(patches, {0, 0}, spec, cfg), contract_error);
    REQUIRE_THROWS_AS(train_fpr(patches, {1, 1}, spec, cfg), contract_error);
    REQUIRE_THROWS_AS(train_fpr(patches, {0, 1}, spec, cfg, {noise_patch(16, rng)}, {}),
                      contract_error);
}

TEST_CASE("train_fpr: separates bright spheres from vessel-like tubes") {
    std::mt19937_64 rng(57);
    std::vector<array3d<float>> patches;
    std::vector<int> labels;
    for (int i = 0; i < 6; ++i) {
        patches.push_back(sphere_patch(16, 4.0, rng));
        labels.push_back(1);
    }
    for (int i = 0; i < 12; ++i) {
        patches.push_back(tube_patch(16, 1.5 + 0.1 * (i % 4), i % 3, rng));
        labels.push_back(0);
    }

    train_config_3d cfg;
    cfg.width_divisor = 4;
    cfg.dense_width = 32;
    cfg.batch_size = 8;
    cfg.max_epochs = 100;
    cfg.lr_initial = 1e-3;
    cfg.lr_factor = 0.1;      // keep learning after the noisy early epochs
    cfg.early_patience = 25;
    cfg.seed = 9;
    fpr_train_result r = train_fpr(patches, labels, nn::cube_net_spec::for_side(16), cfg);
    REQUIRE(!r.log.empty());
    REQUIRE(r.best_epoch >= 1);
    REQUIRE(r.stopped_epoch >= r.best_epoch);
    REQUIRE(r.log[size_t(r.best_epoch - 1)].val_loss <= r.log[0].val_loss);

    nn::tensor x({int(patches.size()), 1, 16, 16, 16});
    for (size_t i = 0; i < patches.size(); ++i)
        std::copy(patches[i].raw().begin(), patches[i].raw().end(),
                  x.ptr() + int64_t(i) * 16 * 16 * 16);
    const auto probs = r.net.predict(x);
    double mean_pos = 0, mean_neg = 0;
    for (size_t i = 0; i < 6; ++i) mean_pos += probs[i] / 6.0;
    for (size_t i = 6; i < 18; ++i) mean_neg += probs[i] / 12.0;
    INFO("mean_pos " << mean_pos << " mean_neg " << mean_neg);
    REQUIRE(mean_pos >= 0.7);
    REQUIRE(mean_neg <= 0.3);
}

TEST_CASE("score_candidates: wrong net sides are rejected") {
    nn::cube_net3d small16(nn::cube_net_spec::for_side(16), 1, 16, 8);
    nn::cube_net3d other16(nn::cube_net_spec::for_side(16), 2, 16, 8);
    const ct_volume v = coord_volume(16);
    std::vector<candidate> cands{at_voxel(8, 8, 8)};
    REQUIRE_THROWS_AS(score_candidates(v, cands, small16, other16), contract_error);
}

TEST_CASE("score_candidates: replaces placeholder probabilities in place") {
    nn::cube_net3d net16(nn::cube_net_spec::for_side(16), 1, 16, 8);
    nn::cube_net3d net32(nn::cube_net_spec::for_side(32), 2, 32, 8);
    ct_volume v = coord_volume(16);
    for (auto& x : v.voxels.raw()) x = std::fmod(x, 1.0f);  // keep activations tame
    std::vector<candidate> cands{at_voxel(8, 8, 8, 8.0), at_voxel(4, 4, 4, 20.0)};
    score_candidates(v, cands, net16, net32, 2);
    for (const auto& c : cands) {
        REQUIRE(c.probability >= 0.0);
        REQUIRE(c.probability <= 1.0);
    }

    // The ensemble rule ties the stored probability to the two nets' outputs.
    nn::tensor x16({2, 1, 16, 16, 16}), x32({2, 1, 32, 32, 32});
    for (int i = 0; i < 2; ++i) {
        const auto p16 = extract_patch(v, cands[size_t(i)], 16);
        const auto p32 = extract_patch(v, cands[size_t(i)], 32);
        std::copy(p16.raw().begin(), p16.raw().end(), x16.ptr() + int64_t(i) * 16 * 16 * 16);
        std::copy(p32.raw().begin(), p32.raw().end(), x32.ptr() + int64_t(i) * 32 * 32 * 32);
    }
    const auto p3 = net16.predict(x16);
    const auto p2 = net32.predict(x32);
    for (int i = 0; i < 2; ++i)
        REQUIRE(cands[size_t(i)].probability ==
                Catch::Approx(ensemble_probability(p2[size_t(i)], p3[size_t(i)],
                                                   cands[size_t(i)].bbox_side))
                    .margin(1e-12));
}
