#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "mipcad/detect/augment2d.hpp"
#include "mipcad/detect/labels.hpp"
#include "mipcad/detect/trainer2d.hpp"

using namespace mipcad;

namespace {

mip_stack blank_stack(int nx, int ny, int nz, int t, const std::string& id = "s1") {
    mip_stack st;
    st.images.assign(size_t(nz), array2d<float>(nx, ny));
    st.slab_thickness_mm = t;
    st.series_id = id;
    st.spacing = {1.0, 1.0, 1.0};
    st.origin = {0.0, 0.0, 0.0};
    st.z_centers.resize(size_t(nz));
    for (int k = 0; k < nz; ++k) st.z_centers[size_t(k)] = double(k);
    return st;
}

int count_fg(const array2d<uint8_t>& m) {
    int n = 0;
    for (uint8_t v : m.raw()) n += v ? 1 : 0;
    return n;
}

// Independent oracle: pixel window of an inclusive interval [lo, hi] along
// one axis with unit spacing and zero origin.
std::pair<int, int> px_window(double lo, double hi) {
    return {int(std::ceil(lo)), int(std::floor(hi))};
}

array2d<float> blob_image(int n, double cx, double cy, double radius, std::mt19937_64& rng) {
    array2d<float> img(n, n);
    std::normal_distribution<float> noise(0.05f, 0.02f);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            img(x, y) = (d2 <= radius * radius ? 0.9f : 0.0f) + noise(rng);
        }
    return img;
}

array2d<uint8_t> square_label(int n, double cx, double cy, double half) {
    array2d<uint8_t> lab(n, n);
    const auto [x_lo, x_hi] = px_window(cx - half, cx + half);
    const auto [y_lo, y_hi] = px_window(cy - half, cy + half);
    for (int y = std::max(0, y_lo); y <= std::min(n - 1, y_hi); ++y)
        for (int x = std::max(0, x_lo); x <= std::min(n - 1, x_hi); ++x) lab(x, y) = 1;
    return lab;
}

double soft_dice(const array2d<float>& pred, const array2d<uint8_t>& lab) {
    double num = 0, den = 1.0;  // matches the eps=1 training objective
    for (int y = 0; y < pred.ny(); ++y)
        for (int x = 0; x < pred.nx(); ++x) {
            num += 2.0 * double(pred(x, y)) * double(lab(x, y));
            den += double(pred(x, y)) + double(lab(x, y));
        }
    return (num + 1.0) / den;
}

}  // namespace

TEST_CASE("rasterize: 6 mm nodule at z=50 marks slices 47..53 for t=1") {
    mip_stack st = blank_stack(64, 64, 100, 1);
    const std::vector<nodule_annotation> anns{{"s1", {32.0, 32.0, 50.0}, 6.0}};
    const auto maps = rasterize_labels(anns, st);
    REQUIRE(maps.size() == 100);
    for (int k = 0; k < 100; ++k) {
        const bool inside = (k >= 47 && k <= 53);
        INFO("slice " << k);
        REQUIRE((count_fg(maps[size_t(k)]) > 0) == inside);
    }
}

TEST_CASE("rasterize: same nodule under t=15 slabs marks slices 40..60") {
    mip_stack st = blank_stack(64, 64, 100, 15);
    const std::vector<nodule_annotation> anns{{"s1", {32.0, 32.0, 50.0}, 6.0}};
    const auto maps = rasterize_labels(anns, st);
    for (int k = 0; k < 100; ++k) {
        const bool inside = (k >= 40 && k <= 60);
        INFO("slice " << k);
        REQUIRE((count_fg(maps[size_t(k)]) > 0) == inside);
    }
}

TEST_CASE("rasterize: in-plane square is the inclusive ceil/floor pixel window") {
    mip_stack st = blank_stack(64, 64, 100, 1);

    SECTION("integer center: 7 px wide") {
        const std::vector<nodule_annotation> anns{{"s1", {32.0, 32.0, 50.0}, 6.0}};
        const auto maps = rasterize_labels(anns, st);
        const auto& m = maps[50];
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                const bool inside = x >= 29 && x <= 35 && y >= 29 && y <= 35;
                REQUIRE(m(x, y) == (inside ? 1 : 0));
            }
        REQUIRE(count_fg(m) == 49);
    }

    SECTION("fractional center: 6 px wide on the fractional axis") {
        const std::vector<nodule_annotation> anns{{"s1", {32.5, 32.0, 50.0}, 6.0}};
        const auto maps = rasterize_labels(anns, st);
        const auto& m = maps[50];
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                const bool inside = x >= 30 && x <= 35 && y >= 29 && y <= 35;
                REQUIRE(m(x, y) == (inside ? 1 : 0));
            }
        REQUIRE(count_fg(m) == 42);
    }
}

TEST_CASE("rasterize: anisotropic in-plane spacing scales the pixel window") {
    mip_stack st = blank_stack(64, 64, 20, 1);
    st.spacing = {0.5, 2.0, 1.0};
    // 6 mm box: x window [13, 19] mm = px [26, 38] at 0.5 mm; y window [29, 35] mm = px [15, 17] at 2 mm.
    const std::vector<nodule_annotation> anns{{"s1", {16.0, 32.0, 10.0}, 6.0}};
    const auto maps = rasterize_labels(anns, st);
    const auto& m = maps[10];
    const auto [x_lo, x_hi] = px_window(13.0 / 0.5, 19.0 / 0.5);
    const auto [y_lo, y_hi] = px_window(29.0 / 2.0, 35.0 / 2.0);
    REQUIRE(x_lo == 26);
    REQUIRE(x_hi == 38);
    REQUIRE(y_lo == 15);
    REQUIRE(y_hi == 17);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const bool inside = x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi;
            REQUIRE(m(x, y) == (inside ? 1 : 0));
        }
}

TEST_CASE("rasterize: empty annotations and foreign series give all-zero maps") {
    mip_stack st = blank_stack(32, 32, 10, 5);
    for (const auto& m : rasterize_labels({}, st)) REQUIRE(count_fg(m) == 0);
    const std::vector<nodule_annotation> other{{"someone_else", {16, 16, 5}, 6.0}};
    for (const auto& m : rasterize_labels(other, st)) REQUIRE(count_fg(m) == 0);
}

TEST_CASE("rasterize: a nodule entirely outside the volume is skipped") {
    mip_stack st = blank_stack(32, 32, 10, 1);
    const std::vector<nodule_annotation> anns{{"s1", {16, 16, 500.0}, 6.0}};
    for (const auto& m : rasterize_labels(anns, st)) REQUIRE(count_fg(m) == 0);
}

TEST_CASE("augment: all-zero parameters are the identity") {
    std::mt19937_64 rng(31);
    array2d<float> img(16, 16);
    for (auto& v : img.raw()) v = float(rng() % 100) / 7.f;
    const auto out = apply_augment2d(img, augment_params2d{});
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) REQUIRE(out(x, y) == img(x, y));
}

TEST_CASE("augment: quarter turn matches the index formula") {
    array2d<int> a(3, 3);
    int v = 0;
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) a(x, y) = v++;
    augment_params2d p;
    p.rot_quarters = 1;
    const auto out = apply_augment2d(a, p);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) REQUIRE(out(x, y) == a(3 - 1 - y, x));
}

TEST_CASE("augment: involutions undo themselves") {
    std::mt19937_64 rng(32);
    array2d<float> img(12, 12);
    for (auto& v : img.raw()) v = float(rng() % 997);

    SECTION("half turn applied twice") {
        augment_params2d p;
        p.rot_quarters = 2;
        const auto once = apply_augment2d(img, p);
        const auto twice = apply_augment2d(once, p);
        for (size_t i = 0; i < img.raw().size(); ++i) REQUIRE(twice.raw()[i] == img.raw()[i]);
    }
    SECTION("horizontal flip applied twice") {
        augment_params2d p;
        p.flip_h = true;
        const auto twice = apply_augment2d(apply_augment2d(img, p), p);
        for (size_t i = 0; i < img.raw().size(); ++i) REQUIRE(twice.raw()[i] == img.raw()[i]);
    }
    SECTION("vertical flip applied twice") {
        augment_params2d p;
        p.flip_v = true;
        const auto twice = apply_augment2d(apply_augment2d(img, p), p);
        for (size_t i = 0; i < img.raw().size(); ++i) REQUIRE(twice.raw()[i] == img.raw()[i]);
    }
    SECTION("four quarter turns") {
        augment_params2d p;
        p.rot_quarters = 1;
        auto out = img;
        for (int i = 0; i < 4; ++i) out = apply_augment2d(out, p);
        for (size_t i = 0; i < img.raw().size(); ++i) REQUIRE(out.raw()[i] == img.raw()[i]);
    }
}

TEST_CASE("augment: foreground count survives any in-frame transform") {
    std::mt19937_64 rng(33);
    // Square well inside a 32 px frame: translations up to 8 px keep it in frame.
    const auto lab = square_label(32, 15.0, 16.0, 3.0);
    const int n0 = count_fg(lab);
    REQUIRE(n0 == 49);
    for (int trial = 0; trial < 200; ++trial) {
        const augment_params2d p = sample_augment2d(rng, 8);
        REQUIRE(count_fg(apply_augment2d(lab, p)) == n0);
    }
}

TEST_CASE("augment: image and label transform jointly") {
    std::mt19937_64 rng(34);
    const auto img = blob_image(32, 12.0, 18.0, 3.0, rng);
    const auto lab = square_label(32, 12.0, 18.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const augment_params2d p = sample_augment2d(rng, 6);
        const auto ai = apply_augment2d(img, p);
        const auto al = apply_augment2d(lab, p);
        // Brightest image pixel must be inside the transformed label square.
        int bx = 0, by = 0;
        float bmax = -1;
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                if (ai(x, y) > bmax) bmax = ai(x, y), bx = x, by = y;
        REQUIRE(al(bx, by) == 1);
    }
}

TEST_CASE("augment: non-square input is rejected") {
    array2d<float> img(8, 6);
    REQUIRE_THROWS_AS(apply_augment2d(img, augment_params2d{}), contract_error);
}

TEST_CASE("trainer: empty training set and count mismatch are rejected") {
    detect_dataset empty;
    REQUIRE_THROWS_AS(train_detector(empty, {}, train_config_2d{}), contract_error);

    mip_stack st = blank_stack(16, 16, 4, 1);
    std::vector<array2d<uint8_t>> maps(3, array2d<uint8_t>(16, 16));
    detect_dataset ds;
    REQUIRE_THROWS_AS(ds.add_stack(st, maps), contract_error);
}

TEST_CASE("trainer: overfits separable blobs and localizes them") {
    std::mt19937_64 rng(35);
    detect_dataset train;
    train.slab_thickness_mm = 1;
    const double centers[8][2] = {{10, 10}, {22, 10}, {10, 22}, {22, 22},
                                  {16, 12}, {12, 16}, {20, 16}, {16, 20}};
    for (const auto& c : centers) {
        // Foreground congruent with its label, the way rasterized squares
        // cover the bright nodule in a MIP image.
        auto lab = square_label(32, c[0], c[1], 3.0);
        array2d<float> img(32, 32);
        std::normal_distribution<float> noise(0.05f, 0.02f);
        for (size_t j = 0; j < img.raw().size(); ++j)
            img.raw()[j] = noise(rng) + (lab.raw()[j] ? 0.85f : 0.f);
        train.images.push_back(std::move(img));
        train.labels.push_back(std::move(lab));
    }
    for (int i = 0; i < 4; ++i) {
        array2d<float> bg(32, 32);
        std::normal_distribution<float> noise(0.05f, 0.02f);
        for (auto& v : bg.raw()) v = noise(rng);
        train.images.push_back(std::move(bg));
        train.labels.push_back(array2d<uint8_t>(32, 32));
    }

    train_config_2d cfg;
    cfg.base_width = 8;
    cfg.batch_size = 4;
    cfg.max_epochs = 60;
    cfg.lr_initial = 2e-3;
    cfg.max_translate_px = 4;
    cfg.seed = 7;
    detect_train_result r = train_detector(train, {}, cfg);
    REQUIRE(r.slab_thickness_mm == 1);
    REQUIRE(!r.log.empty());
    REQUIRE(r.best_epoch >= 1);
    REQUIRE(r.stopped_epoch >= r.best_epoch);
    // Loss log decreases from first to best epoch.
    REQUIRE(r.log[size_t(r.best_epoch - 1)].val_loss <= r.log[0].val_loss);

    mip_stack st = blank_stack(32, 32, int(train.images.size()), 1);
    st.images = train.images;
    const auto maps = predict_maps(r.net, r.slab_thickness_mm, st);
    REQUIRE(maps.size() == train.images.size());

    double dice_sum = 0;
    int dice_n = 0;
    for (size_t i = 0; i < 8; ++i) {
        dice_sum += soft_dice(maps[i], train.labels[i]);
        ++dice_n;
        const int cx = int(centers[i][0]), cy = int(centers[i][1]);
        INFO("blob " << i << " prob " << maps[i](cx, cy));
        REQUIRE(maps[i](cx, cy) >= 0.5f);
        // Off-label pixels of a foreground image stay quiet: this is where
        // the dice gradient actually pushes the background down.
        double off = 0;
        int off_n = 0;
        for (size_t j = 0; j < maps[i].raw().size(); ++j)
            if (!train.labels[i].raw()[j]) {
                off += maps[i].raw()[j];
                ++off_n;
            }
        REQUIRE(off / off_n <= 0.2);
    }
    REQUIRE(dice_sum / dice_n >= 0.8);

    // Structureless images get no dice gradient of their own, so they only
    // need to stay clear of saturation.
    for (size_t i = 8; i < maps.size(); ++i) {
        double mean = 0;
        for (float v : maps[i].raw()) mean += v;
        REQUIRE(mean / double(maps[i].raw().size()) <= 0.75);
    }
}

TEST_CASE("predict_maps: outputs are probabilities and deterministic") {
    std::mt19937_64 rng(36);
    nn::unet2d net(4, 11);
    mip_stack st = blank_stack(32, 32, 5, 5);
    for (auto& img : st.images)
        for (auto& v : img.raw()) v = float(rng() % 1000) / 1000.f;
    const auto a = predict_maps(net, 5, st);
    const auto b = predict_maps(net, 5, st);
    REQUIRE(a.size() == 5);
    for (size_t k = 0; k < a.size(); ++k)
        for (size_t i = 0; i < a[k].raw().size(); ++i) {
            REQUIRE(a[k].raw()[i] >= 0.f);
            REQUIRE(a[k].raw()[i] <= 1.f);
            REQUIRE(a[k].raw()[i] == b[k].raw()[i]);
        }
}

TEST_CASE("predict_maps: slab thickness mismatch is rejected") {
    nn::unet2d net(4, 11);
    mip_stack st = blank_stack(16, 16, 2, 10);
    REQUIRE_THROWS_AS(predict_maps(net, 5, st), contract_error);
}
