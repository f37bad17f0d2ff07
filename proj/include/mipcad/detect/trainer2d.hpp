#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <vector>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"
#include "mipcad/detect/augment2d.hpp"
#include "mipcad/mip/mip.hpp"
#include "mipcad/nn/loss.hpp"
#include "mipcad/nn/optimizer.hpp"
#include "mipcad/nn/trainlog.hpp"
#include "mipcad/nn/unet2d.hpp"

namespace mipcad {

struct train_config_2d {
    int batch_size = 5;
    double lr_initial = 1e-3;
    double lr_factor = 0.01;
    int lr_patience = 5;
    double lr_floor = 1e-7;
    int early_patience = 10;
    int max_epochs = 100;
    float dice_eps = 1.0f;
    int max_translate_px = 30;
    int base_width = 32;
    uint64_t seed = 1;
};

// Flat training set for one detection stream: MIP images with their
// rasterized label maps, all square and equally sized.
struct detect_dataset {
    std::vector<array2d<float>> images;
    std::vector<array2d<uint8_t>> labels;
    int slab_thickness_mm = 1;

    void add_stack(const mip_stack& stack, const std::vector<array2d<uint8_t>>& maps) {
        if (stack.images.size() != maps.size())
            throw contract_error("detect_dataset: stack/label count mismatch");
        slab_thickness_mm = stack.slab_thickness_mm;
        images.insert(images.end(), stack.images.begin(), stack.images.end());
        labels.insert(labels.end(), maps.begin(), maps.end());
    }
};

struct detect_train_result {
    nn::unet2d net;
    int slab_thickness_mm = 1;
    std::vector<train_epoch> log;
    int stopped_epoch = 0;
    int best_epoch = 0;
};

namespace detail {

inline bool any_foreground(const array2d<uint8_t>& m) {
    for (uint8_t v : m.raw())
        if (v) return true;
    return false;
}

inline void fill_sample(nn::tensor& x, nn::tensor& y, int slot, const array2d<float>& img,
                        const array2d<uint8_t>& lab) {
    const int h = img.ny(), w = img.nx();
    float* xp = x.ptr() + int64_t(slot) * h * w;
    float* yp = y.ptr() + int64_t(slot) * h * w;
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
            xp[int64_t(yy) * w + xx] = img(xx, yy);
            yp[int64_t(yy) * w + xx] = float(lab(xx, yy));
        }
}

inline double eval_dice(nn::unet2d& net, const detect_dataset& ds, int batch_size, float eps) {
    double total = 0;
    const int n = int(ds.images.size());
    for (int b0 = 0; b0 < n; b0 += batch_size) {
        const int b = std::min(batch_size, n - b0);
        const int h = ds.images[size_t(b0)].ny(), w = ds.images[size_t(b0)].nx();
        nn::tensor x({b, 1, h, w}), y({b, 1, h, w});
        for (int i = 0; i < b; ++i)
            fill_sample(x, y, i, ds.images[size_t(b0 + i)], ds.labels[size_t(b0 + i)]);
        const nn::tensor pred = net.forward(x, false);
        total += double(nn::dice_loss_batch(pred, y, eps).loss) * b;
    }
    return total / std::max(1, n);
}

}  // namespace detail

// Trains one detection stream. Only images whose label map contains
// foreground are augmented; nodule-free images pass through unmodified.
// Returns the weights of the epoch with the lowest validation dice loss.
// An empty validation set falls back to validating on the training set.
inline detect_train_result train_detector(const detect_dataset& train, const detect_dataset& val,
                                          const train_config_2d& cfg) {
    if (train.images.empty()) throw contract_error("train_detector: empty training set");
    if (train.images.size() != train.labels.size())
        throw contract_error("train_detector: image/label count mismatch");

    detect_train_result out{nn::unet2d(cfg.base_width, cfg.seed), train.slab_thickness_mm, {}, 0, 0};
    nn::adam opt(out.net.params(), float(cfg.lr_initial));
    nn::plateau_lr sched(float(cfg.lr_initial), float(cfg.lr_factor), cfg.lr_patience,
                         float(cfg.lr_floor));
    nn::early_stop stopper(cfg.early_patience);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    const detect_dataset& vset = val.images.empty() ? train : val;
    std::vector<int> idx(train.images.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<std::vector<float>> best;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), rng);
        double train_loss = 0;
        const int n = int(idx.size());
        for (int b0 = 0; b0 < n; b0 += cfg.batch_size) {
            const int b = std::min(cfg.batch_size, n - b0);
            const int h = train.images[size_t(idx[size_t(b0)])].ny();
            const int w = train.images[size_t(idx[size_t(b0)])].nx();
            nn::tensor x({b, 1, h, w}), y({b, 1, h, w});
            for (int i = 0; i < b; ++i) {
                const auto& img = train.images[size_t(idx[size_t(b0 + i)])];
                const auto& lab = train.labels[size_t(idx[size_t(b0 + i)])];
                if (detail::any_foreground(lab)) {
                    const augment_params2d p = sample_augment2d(rng, cfg.max_translate_px);
                    detail::fill_sample(x, y, i, apply_augment2d(img, p), apply_augment2d(lab, p));
                } else {
                    detail::fill_sample(x, y, i, img, lab);
                }
            }
            const nn::tensor pred = out.net.forward(x, true);
            auto loss = nn::dice_loss_batch(pred, y, cfg.dice_eps);
            opt.zero_grad();
            out.net.backward(loss.grad);
            opt.step();
            train_loss += double(loss.loss) * b;
        }
        train_loss /= n;

        const double val_loss = detail::eval_dice(out.net, vset, cfg.batch_size, cfg.dice_eps);
        out.log.push_back({epoch, train_loss, val_loss, double(opt.lr())});

        const bool stop = stopper.observe(float(val_loss));
        if (stopper.improved_last()) {
            best = nn::snapshot_state(out.net);
            out.best_epoch = epoch;
        }
        opt.set_lr(sched.observe(float(val_loss)));
        out.stopped_epoch = epoch;
        if (stop) break;
    }
    if (!best.empty()) nn::restore_state(out.net, best);
    return out;
}

// Probability maps for every image of a stack, in evaluation mode.
// The model must have been trained for the stack's slab thickness.
inline std::vector<array2d<float>> predict_maps(nn::unet2d& net, int model_thickness_mm,
                                                const mip_stack& stack, int batch_size = 4) {
    if (model_thickness_mm != stack.slab_thickness_mm)
        throw contract_error("predict_maps: model/stack slab thickness mismatch");
    std::vector<array2d<float>> maps;
    const int n = int(stack.images.size());
    maps.reserve(size_t(n));
    for (int b0 = 0; b0 < n; b0 += batch_size) {
        const int b = std::min(batch_size, n - b0);
        const int h = stack.images[size_t(b0)].ny(), w = stack.images[size_t(b0)].nx();
        nn::tensor x({b, 1, h, w});
        for (int i = 0; i < b; ++i) {
            const auto& img = stack.images[size_t(b0 + i)];
            float* xp = x.ptr() + int64_t(i) * h * w;
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) xp[int64_t(yy) * w + xx] = img(xx, yy);
        }
        const nn::tensor pred = net.forward(x, false);
        for (int i = 0; i < b; ++i) {
            array2d<float> m(w, h);
            const float* pp = pred.ptr() + int64_t(i) * h * w;
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) m(xx, yy) = pp[int64_t(yy) * w + xx];
            maps.push_back(std::move(m));
        }
    }
    return maps;
}

}  // namespace mipcad
