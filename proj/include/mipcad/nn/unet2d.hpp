#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "mipcad/core/error.hpp"
#include "mipcad/nn/layers.hpp"
#include "mipcad/nn/state.hpp"
#include "mipcad/nn/tensor.hpp"

namespace mipcad::nn {

// conv 3x3 -> batchnorm -> relu, the repeating unit of the U-Net.
class conv_block2d {
public:
    conv_block2d(int cin, int cout, std::mt19937_64& rng) : conv_(cin, cout, 3, rng), bn_(cout) {}

    tensor forward(const tensor& x, bool train) {
        return act_.forward(bn_.forward(conv_.forward(x, train), train), train);
    }
    tensor backward(const tensor& dy) { return conv_.backward(bn_.backward(act_.backward(dy))); }

    void params(std::vector<param_block>& out) {
        conv_.params(out);
        bn_.params(out);
    }
    void state(std::vector<state_block>& out) {
        conv_.state(out);
        bn_.state(out);
    }

private:
    conv2d conv_;
    batchnorm bn_;
    relu act_;
};

// Encoder-decoder segmentation net with four resolution levels, a bottleneck,
// and skip concatenations. Channel widths are (w, 2w, 4w, 8w, 16w) for base
// width w; output is a single sigmoid probability map at input resolution.
// Input height/width must be divisible by 16.
class unet2d {
public:
    explicit unet2d(int base_width = 32, uint64_t seed = 0x756e6574u) : base_(base_width) {
        if (base_width < 1) throw parameter_error("unet2d: base width must be >= 1");
        std::mt19937_64 rng(seed);
        const int w = base_width;
        enc_.reserve(8);
        enc_.emplace_back(1, w, rng);
        enc_.emplace_back(w, w, rng);
        enc_.emplace_back(w, 2 * w, rng);
        enc_.emplace_back(2 * w, 2 * w, rng);
        enc_.emplace_back(2 * w, 4 * w, rng);
        enc_.emplace_back(4 * w, 4 * w, rng);
        enc_.emplace_back(4 * w, 8 * w, rng);
        enc_.emplace_back(8 * w, 8 * w, rng);
        mid_.reserve(2);
        mid_.emplace_back(8 * w, 16 * w, rng);
        mid_.emplace_back(16 * w, 16 * w, rng);
        dec_.reserve(8);
        dec_.emplace_back(24 * w, 8 * w, rng);
        dec_.emplace_back(8 * w, 8 * w, rng);
        dec_.emplace_back(12 * w, 4 * w, rng);
        dec_.emplace_back(4 * w, 4 * w, rng);
        dec_.emplace_back(6 * w, 2 * w, rng);
        dec_.emplace_back(2 * w, 2 * w, rng);
        dec_.emplace_back(3 * w, w, rng);
        dec_.emplace_back(w, w, rng);
        head_ = std::make_unique<conv2d>(w, 1, 1, rng);
    }

    int base_width() const { return base_; }

    // 3x3 convolutions only; the 1x1 head is excluded.
    int conv3x3_count() const { return int(enc_.size() + mid_.size() + dec_.size()); }

    tensor forward(const tensor& x, bool train) {
        if (x.rank() != 4 || x.dim(1) != 1) throw contract_error("unet2d: expected (n,1,h,w)");
        if (x.dim(2) % 16 || x.dim(3) % 16)
            throw contract_error("unet2d: input size must be divisible by 16");
        tensor t = x;
        for (int lvl = 0; lvl < 4; ++lvl) {
            t = enc_[size_t(2 * lvl)].forward(t, train);
            t = enc_[size_t(2 * lvl + 1)].forward(t, train);
            skip_[size_t(lvl)] = t;
            t = pool_[size_t(lvl)].forward(t, train);
        }
        t = mid_[0].forward(t, train);
        t = mid_[1].forward(t, train);
        for (int lvl = 3; lvl >= 0; --lvl) {
            t = up_[size_t(lvl)].forward(t, train);
            skip_ch_[size_t(lvl)] = skip_[size_t(lvl)].dim(1);
            t = concat_channels(skip_[size_t(lvl)], t);
            const size_t d = size_t(2 * (3 - lvl));
            t = dec_[d].forward(t, train);
            t = dec_[d + 1].forward(t, train);
        }
        t = head_->forward(t, train);
        return out_.forward(t, train);
    }

    // dy is the gradient w.r.t. the sigmoid output of the latest training
    // forward pass.
    tensor backward(const tensor& dy) {
        tensor t = head_->backward(out_.backward(dy));
        std::array<tensor, 4> dskip;
        for (int lvl = 0; lvl <= 3; ++lvl) {
            const size_t d = size_t(2 * (3 - lvl));
            t = dec_[d].backward(dec_[d + 1].backward(t));
            auto [da, db] = split_channels(t, skip_ch_[size_t(lvl)]);
            dskip[size_t(lvl)] = std::move(da);
            t = up_[size_t(lvl)].backward(db);
        }
        t = mid_[0].backward(mid_[1].backward(t));
        for (int lvl = 3; lvl >= 0; --lvl) {
            t = pool_[size_t(lvl)].backward(t);
            // Skip branch feeds the same activation as the pooled branch.
            for (int64_t i = 0; i < t.numel(); ++i)
                t.data[size_t(i)] += dskip[size_t(lvl)].data[size_t(i)];
            t = enc_[size_t(2 * lvl + 1)].backward(t);
            t = enc_[size_t(2 * lvl)].backward(t);
        }
        return t;
    }

    std::vector<param_block> params() {
        std::vector<param_block> out;
        for (auto& b : enc_) b.params(out);
        for (auto& b : mid_) b.params(out);
        for (auto& b : dec_) b.params(out);
        head_->params(out);
        return out;
    }

    std::vector<state_block> state() {
        std::vector<state_block> out;
        for (auto& b : enc_) b.state(out);
        for (auto& b : mid_) b.state(out);
        for (auto& b : dec_) b.state(out);
        head_->state(out);
        return out;
    }

private:
    int base_;
    std::vector<conv_block2d> enc_, mid_, dec_;
    std::array<maxpool2d, 4> pool_;
    std::array<upsample2d, 4> up_;
    std::unique_ptr<conv2d> head_;
    sigmoid out_;
    std::array<tensor, 4> skip_;
    std::array<int, 4> skip_ch_ = {0, 0, 0, 0};
};

}  // namespace mipcad::nn
