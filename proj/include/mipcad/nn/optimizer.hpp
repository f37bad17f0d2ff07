#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mipcad/core/error.hpp"
#include "mipcad/nn/tensor.hpp"

namespace mipcad::nn {

// Adam with bias correction. One optimizer instance owns the moment buffers
// for a fixed parameter list; the list must not change between steps.
class adam {
public:
    explicit adam(std::vector<param_block> params, float lr = 1e-3f, float beta1 = 0.9f,
                  float beta2 = 0.999f, float eps = 1e-8f)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const auto& p : params_) {
            m_.emplace_back(p.value->size(), 0.f);
            v_.emplace_back(p.value->size(), 0.f);
        }
    }

    void set_lr(float lr) { lr_ = lr; }
    float lr() const { return lr_; }

    void zero_grad() {
        for (auto& p : params_) std::fill(p.grad->begin(), p.grad->end(), 0.f);
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(double(beta1_), double(t_));
        const double bc2 = 1.0 - std::pow(double(beta2_), double(t_));
        for (size_t i = 0; i < params_.size(); ++i) {
            auto& val = *params_[i].value;
            auto& grd = *params_[i].grad;
            auto& m = m_[i];
            auto& v = v_[i];
            for (size_t j = 0; j < val.size(); ++j) {
                const float g = grd[j];
                m[j] = beta1_ * m[j] + (1.f - beta1_) * g;
                v[j] = beta2_ * v[j] + (1.f - beta2_) * g * g;
                const double mhat = m[j] / bc1, vhat = v[j] / bc2;
                val[j] -= float(double(lr_) * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

private:
    std::vector<param_block> params_;
    std::vector<std::vector<float>> m_, v_;
    float lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

// Reduce-on-plateau schedule: when validation loss has not strictly improved
// for `patience` consecutive epochs, multiply the rate by `factor` and clamp
// at `floor`. Observing resets the stall counter on improvement.
class plateau_lr {
public:
    plateau_lr(float initial, float factor = 0.01f, int patience = 5, float floor = 1e-7f)
        : lr_(initial), factor_(factor), patience_(patience), floor_(floor) {}

    float observe(float val_loss) {
        if (val_loss < best_) {
            best_ = val_loss;
            stall_ = 0;
        } else if (++stall_ >= patience_) {
            lr_ = std::max(lr_ * factor_, floor_);
            stall_ = 0;
        }
        return lr_;
    }

    float lr() const { return lr_; }

private:
    float lr_, factor_;
    int patience_;
    float floor_;
    float best_ = std::numeric_limits<float>::infinity();
    int stall_ = 0;
};

// Early stopping on strict improvement of validation loss. `observe` returns
// true when training should stop, i.e. `patience` epochs have elapsed since
// the last improvement. Tracks which epoch held the best loss so the caller
// can restore the matching snapshot.
class early_stop {
public:
    explicit early_stop(int patience = 10) : patience_(patience) {}

    bool observe(float val_loss) {
        ++epoch_;
        if (val_loss < best_) {
            best_ = val_loss;
            best_epoch_ = epoch_;
            stall_ = 0;
            return false;
        }
        return ++stall_ >= patience_;
    }

    bool improved_last() const { return stall_ == 0; }
    int best_epoch() const { return best_epoch_; }
    float best_loss() const { return best_; }

private:
    int patience_;
    int epoch_ = 0;
    int stall_ = 0;
    int best_epoch_ = 0;
    float best_ = std::numeric_limits<float>::infinity();
};

}  // namespace mipcad::nn
