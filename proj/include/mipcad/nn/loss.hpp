#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "mipcad/core/error.hpp"
#include "mipcad/nn/tensor.hpp"

namespace mipcad::nn {

// Soft Dice loss for one prediction/target pair:
//   L = 1 - (2*sum(x*y) + eps) / (sum(x) + sum(y) + eps)
// The smoothing term keeps empty targets well-defined (loss 0 when x == y == 0).
struct dice_result {
    float loss;
    tensor grad;
};

inline dice_result dice_loss(const tensor& pred, const tensor& target, float eps = 1.0f) {
    if (!pred.same_shape(target)) throw contract_error("dice_loss: shape mismatch");
    double inter = 0, sx = 0, sy = 0;
    for (int64_t i = 0; i < pred.numel(); ++i) {
        const double x = pred.data[size_t(i)], y = target.data[size_t(i)];
        inter += x * y;
        sx += x;
        sy += y;
    }
    const double num = 2.0 * inter + eps;
    const double den = sx + sy + eps;
    dice_result r;
    r.loss = float(1.0 - num / den);
    r.grad = tensor(pred.shape);
    const double inv_den2 = 1.0 / (den * den);
    for (int64_t i = 0; i < pred.numel(); ++i) {
        const double y = target.data[size_t(i)];
        r.grad.data[size_t(i)] = float(-(2.0 * y * den - num) * inv_den2);
    }
    return r;
}

// Batch version: per-sample Dice averaged over the batch; gradient is the
// per-sample gradient scaled by 1/n.
inline dice_result dice_loss_batch(const tensor& pred, const tensor& target, float eps = 1.0f) {
    if (!pred.same_shape(target)) throw contract_error("dice_loss: shape mismatch");
    const int n = pred.dim(0);
    const int64_t per = pred.numel() / n;
    dice_result r;
    r.loss = 0.f;
    r.grad = tensor(pred.shape);
    for (int s = 0; s < n; ++s) {
        double inter = 0, sx = 0, sy = 0;
        const float* xp = pred.ptr() + int64_t(s) * per;
        const float* yp = target.ptr() + int64_t(s) * per;
        for (int64_t i = 0; i < per; ++i) {
            inter += double(xp[i]) * yp[i];
            sx += xp[i];
            sy += yp[i];
        }
        const double num = 2.0 * inter + eps;
        const double den = sx + sy + eps;
        r.loss += float(1.0 - num / den);
        const double scale = 1.0 / (den * den * n);
        float* gp = r.grad.ptr() + int64_t(s) * per;
        for (int64_t i = 0; i < per; ++i)
            gp[i] = float(-(2.0 * double(yp[i]) * den - num) * scale);
    }
    r.loss /= float(n);
    return r;
}

// Two-class softmax cross-entropy on logits (n, 2); labels are 0 or 1.
// Returns mean loss and d(loss)/d(logits). Also exposes the softmax
// probabilities for callers that want scores from the same pass.
struct xent_result {
    float loss;
    tensor grad;
    tensor prob;
};

inline xent_result softmax2_cross_entropy(const tensor& logits, const std::vector<int>& labels) {
    const int n = logits.dim(0);
    if (logits.rank() != 2 || logits.dim(1) != 2)
        throw contract_error("softmax2_cross_entropy: expected (n, 2) logits");
    if (int(labels.size()) != n)
        throw contract_error("softmax2_cross_entropy: label count mismatch");
    xent_result r;
    r.loss = 0.f;
    r.grad = tensor(logits.shape);
    r.prob = tensor(logits.shape);
    for (int s = 0; s < n; ++s) {
        const float a = logits.data[size_t(s) * 2], b = logits.data[size_t(s) * 2 + 1];
        const float m = std::max(a, b);
        const double ea = std::exp(double(a - m)), eb = std::exp(double(b - m));
        const double z = ea + eb;
        const double pa = ea / z, pb = eb / z;
        r.prob.data[size_t(s) * 2] = float(pa);
        r.prob.data[size_t(s) * 2 + 1] = float(pb);
        const int lbl = labels[size_t(s)];
        if (lbl != 0 && lbl != 1) throw contract_error("softmax2_cross_entropy: label not in {0,1}");
        r.loss += float(-std::log(std::max(lbl == 0 ? pa : pb, 1e-12)));
        r.grad.data[size_t(s) * 2] = float((pa - (lbl == 0 ? 1.0 : 0.0)) / n);
        r.grad.data[size_t(s) * 2 + 1] = float((pb - (lbl == 1 ? 1.0 : 0.0)) / n);
    }
    r.loss /= float(n);
    return r;
}

}  // namespace mipcad::nn
