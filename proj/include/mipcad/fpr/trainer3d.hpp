#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"
#include "mipcad/ct/volume.hpp"
#include "mipcad/eval/froc.hpp"
#include "mipcad/fpr/patch.hpp"
#include "mipcad/merge/candidates.hpp"
#include "mipcad/nn/cubenet3d.hpp"
#include "mipcad/nn/loss.hpp"
#include "mipcad/nn/optimizer.hpp"
#include "mipcad/nn/state.hpp"
#include "mipcad/nn/trainlog.hpp"

namespace mipcad {

struct train_config_3d {
    int batch_size = 16;
    double lr_initial = 1e-4;
    double lr_factor = 0.01;
    int lr_patience = 5;
    double lr_floor = 1e-7;
    int early_patience = 10;
    int max_epochs = 100;
    double target_neg_pos_ratio = 3.0;  // positives oversampled to about 1:3
    int width_divisor = 1;
    int dense_width = 128;
    uint64_t seed = 1;
};

// Stage-2 training label: positive when the candidate's center lies within
// the matched nodule's radius (the evaluation hit rule).
inline std::vector<int> label_candidates(const std::vector<candidate>& cands,
                                         const std::vector<nodule_annotation>& anns) {
    const match_result m = match_candidates(cands, anns);
    std::vector<int> labels(cands.size(), 0);
    for (size_t i = 0; i < cands.size(); ++i) labels[i] = m.candidate_class[i] >= 0 ? 1 : 0;
    return labels;
}

struct fpr_train_result {
    nn::cube_net3d net;
    std::vector<train_epoch> log;
    int stopped_epoch = 0;
    int best_epoch = 0;
};

namespace detail {

inline void fill_patch(nn::tensor& x, int slot, const array3d<float>& p) {
    const int s = p.nx();
    float* xp = x.ptr() + int64_t(slot) * s * s * s;
    std::copy(p.raw().begin(), p.raw().end(), xp);
}

inline double eval_xent(nn::cube_net3d& net, const std::vector<array3d<float>>& patches,
                        const std::vector<int>& labels, int batch_size) {
    double total = 0;
    const int n = int(patches.size());
    for (int b0 = 0; b0 < n; b0 += batch_size) {
        const int b = std::min(batch_size, n - b0);
        const int s = patches[size_t(b0)].nx();
        nn::tensor x({b, 1, s, s, s});
        std::vector<int> yb(static_cast<size_t>(b));
        for (int i = 0; i < b; ++i) {
            fill_patch(x, i, patches[size_t(b0 + i)]);
            yb[size_t(i)] = labels[size_t(b0 + i)];
        }
        const nn::tensor logits = net.forward(x, false);
        total += double(nn::softmax2_cross_entropy(logits, yb).loss) * b;
    }
    return total / std::max(1, n);
}

}  // namespace detail

// Trains one 3-D patch classifier. Positives are oversampled with random
// right-angle rotations until the negative:positive ratio drops to about the
// configured target; negatives pass through unmodified. Returns the weights
// of the epoch with the lowest validation loss. An empty validation set
// falls back to validating on the training set.
inline fpr_train_result train_fpr(const std::vector<array3d<float>>& patches,
                                  const std::vector<int>& labels, const nn::cube_net_spec& spec,
                                  const train_config_3d& cfg,
                                  const std::vector<array3d<float>>& val_patches = {},
                                  const std::vector<int>& val_labels = {}) {
    if (patches.size() != labels.size())
        throw contract_error("train_fpr: patch/label count mismatch");
    if (patches.empty()) throw contract_error("train_fpr: empty training set");
    if (val_patches.size() != val_labels.size())
        throw contract_error("train_fpr: validation patch/label count mismatch");
    const int n_pos = int(std::count(labels.begin(), labels.end(), 1));
    const int n_neg = int(labels.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw contract_error("train_fpr: training set must contain both classes");

    fpr_train_result out{nn::cube_net3d(spec, cfg.seed, cfg.width_divisor, cfg.dense_width),
                         {},
                         0,
                         0};
    nn::adam opt(out.net.params(), float(cfg.lr_initial));
    nn::plateau_lr sched(float(cfg.lr_initial), float(cfg.lr_factor), cfg.lr_patience,
                         float(cfg.lr_floor));
    nn::early_stop stopper(cfg.early_patience);
    std::mt19937_64 rng(cfg.seed ^ 0xc2b2ae3d27d4eb4full);

    std::vector<int> pos_idx, base_idx;
    for (size_t i = 0; i < labels.size(); ++i) {
        base_idx.push_back(int(i));
        if (labels[i] == 1) pos_idx.push_back(int(i));
    }
    // Extra positive draws so that n_neg / n_pos_effective ~= target ratio.
    const int want_pos = int(std::ceil(double(n_neg) / cfg.target_neg_pos_ratio));
    const int extra = std::max(0, want_pos - n_pos);

    const std::vector<array3d<float>>& vp = val_patches.empty() ? patches : val_patches;
    const std::vector<int>& vl = val_patches.empty() ? labels : val_labels;
    std::vector<std::vector<float>> best;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::vector<int> idx = base_idx;
        for (int e = 0; e < extra; ++e)
            idx.push_back(pos_idx[size_t(rng() % pos_idx.size())]);
        std::shuffle(idx.begin(), idx.end(), rng);

        double train_loss = 0;
        const int n = int(idx.size());
        for (int b0 = 0; b0 < n; b0 += cfg.batch_size) {
            const int b = std::min(cfg.batch_size, n - b0);
            const int s = patches[size_t(idx[size_t(b0)])].nx();
            nn::tensor x({b, 1, s, s, s});
            std::vector<int> yb(static_cast<size_t>(b));
            for (int i = 0; i < b; ++i) {
                const int src = idx[size_t(b0 + i)];
                yb[size_t(i)] = labels[size_t(src)];
                if (labels[size_t(src)] == 1)
                    detail::fill_patch(x, i,
                                       apply_augment3d(patches[size_t(src)],
                                                       sample_augment3d(rng)));
                else
                    detail::fill_patch(x, i, patches[size_t(src)]);
            }
            const nn::tensor logits = out.net.forward(x, true);
            auto loss = nn::softmax2_cross_entropy(logits, yb);
            opt.zero_grad();
            out.net.backward(loss.grad);
            opt.step();
            train_loss += double(loss.loss) * b;
        }
        train_loss /= n;

        const double val_loss = detail::eval_xent(out.net, vp, vl, cfg.batch_size);
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

// Equal-weight three-source fusion: the 32-cube net, the 16-cube net, and a
// size-routed pick between them (small boxes trust the 16-cube net).
inline double ensemble_probability(double p_archi2, double p_archi3, double bbox_side_px) {
    const double routed = bbox_side_px < 16.0 ? p_archi3 : p_archi2;
    return (p_archi2 + p_archi3 + routed) / 3.0;
}

// Scores candidates of one volume in place. net16 and net32 are the 16-cube
// and 32-cube classifiers.
inline void score_candidates(const ct_volume& v, std::vector<candidate>& cands,
                             nn::cube_net3d& net16, nn::cube_net3d& net32, int batch_size = 16) {
    if (net16.side() != 16 || net32.side() != 32)
        throw contract_error("score_candidates: nets must have sides 16 and 32");
    const int n = int(cands.size());
    for (int b0 = 0; b0 < n; b0 += batch_size) {
        const int b = std::min(batch_size, n - b0);
        nn::tensor x16({b, 1, 16, 16, 16}), x32({b, 1, 32, 32, 32});
        for (int i = 0; i < b; ++i) {
            detail::fill_patch(x16, i, extract_patch(v, cands[size_t(b0 + i)], 16));
            detail::fill_patch(x32, i, extract_patch(v, cands[size_t(b0 + i)], 32));
        }
        const std::vector<double> p3 = net16.predict(x16);
        const std::vector<double> p2 = net32.predict(x32);
        for (int i = 0; i < b; ++i) {
            candidate& c = cands[size_t(b0 + i)];
            c.probability = ensemble_probability(p2[size_t(i)], p3[size_t(i)], c.bbox_side);
        }
    }
}

}  // namespace mipcad
