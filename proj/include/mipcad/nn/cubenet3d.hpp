#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "mipcad/core/error.hpp"
#include "mipcad/nn/layers.hpp"
#include "mipcad/nn/tensor.hpp"

namespace mipcad::nn {

// Architecture of a 3-D patch classifier. A block is `convs` 3x3x3
// convolutions (ReLU after each), one 2x2x2 max pool, then batchnorm.
struct cube_net_spec {
    int side = 0;
    std::vector<int> convs_per_block;
    std::vector<int> widths;

    static cube_net_spec for_side(int side) {
        cube_net_spec s;
        s.side = side;
        if (side == 16) {
            s.convs_per_block = {2, 2, 2};
            s.widths = {16, 32, 64};
        } else if (side == 32) {
            s.convs_per_block = {2, 2, 2, 3};
            s.widths = {16, 32, 64, 128};
        } else {
            throw parameter_error("cube_net_spec: side must be 16 or 32");
        }
        return s;
    }

    // Convolutions + pools + batchnorms across all blocks.
    int layer_census() const {
        int n = 0;
        for (int c : convs_per_block) n += c + 2;
        return n;
    }

    int max_kernels() const { return *std::max_element(widths.begin(), widths.end()); }
};

// 3-D patch classifier: conv blocks, global max pooling, a hidden dense
// layer, and two-class logits (softmax applied by the loss / by predict).
// `width_divisor` scales every width down for fast smoke-scale training.
class cube_net3d {
public:
    explicit cube_net3d(const cube_net_spec& spec, uint64_t seed = 0x63756265u,
                        int width_divisor = 1, int dense_width = 128)
        : spec_(spec) {
        if (width_divisor < 1) throw parameter_error("cube_net3d: bad width divisor");
        std::mt19937_64 rng(seed);
        int cin = 1;
        for (size_t b = 0; b < spec.widths.size(); ++b) {
            const int cout = std::max(1, spec.widths[b] / width_divisor);
            block blk;
            for (int i = 0; i < spec.convs_per_block[b]; ++i) {
                blk.convs.push_back(std::make_unique<conv3d>(i == 0 ? cin : cout, cout, 3, rng));
                blk.acts.emplace_back();
            }
            blk.bn = std::make_unique<batchnorm>(cout);
            blocks_.push_back(std::move(blk));
            cin = cout;
        }
        hidden_width_ = std::max(1, dense_width / width_divisor);
        fc1_ = std::make_unique<dense>(cin, hidden_width_, rng);
        fc2_ = std::make_unique<dense>(hidden_width_, 2, rng);
    }

    int side() const { return spec_.side; }
    const cube_net_spec& arch() const { return spec_; }

    // Logits (n, 2) for patches (n, 1, side, side, side).
    tensor forward(const tensor& x, bool train) {
        if (x.rank() != 5 || x.dim(1) != 1) throw contract_error("cube_net3d: expected (n,1,d,h,w)");
        if (x.dim(2) != spec_.side || x.dim(3) != spec_.side || x.dim(4) != spec_.side)
            throw contract_error("cube_net3d: patch side mismatch");
        tensor t = x;
        for (auto& blk : blocks_) {
            for (size_t i = 0; i < blk.convs.size(); ++i)
                t = blk.acts[i].forward(blk.convs[i]->forward(t, train), train);
            t = blk.pool.forward(t, train);
            t = blk.bn->forward(t, train);
        }
        t = gmp_.forward(t, train);
        t = fc_act_.forward(fc1_->forward(t, train), train);
        return fc2_->forward(t, train);
    }

    tensor backward(const tensor& dlogits) {
        tensor t = fc1_->backward(fc_act_.backward(fc2_->backward(dlogits)));
        t = gmp_.backward(t);
        for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
            t = it->pool.backward(it->bn->backward(t));
            for (size_t i = it->convs.size(); i-- > 0;)
                t = it->convs[i]->backward(it->acts[i].backward(t));
        }
        return t;
    }

    // Nodule probability per patch (softmax class 1) in eval mode.
    std::vector<double> predict(const tensor& x) {
        const tensor logits = forward(x, false);
        std::vector<double> p(size_t(logits.dim(0)));
        for (int s = 0; s < logits.dim(0); ++s) {
            const double a = logits.data[size_t(s) * 2], b = logits.data[size_t(s) * 2 + 1];
            const double m = std::max(a, b);
            const double ea = std::exp(a - m), eb = std::exp(b - m);
            p[size_t(s)] = eb / (ea + eb);
        }
        return p;
    }

    std::vector<param_block> params() {
        std::vector<param_block> out;
        for (auto& blk : blocks_) {
            for (auto& c : blk.convs) c->params(out);
            blk.bn->params(out);
        }
        fc1_->params(out);
        fc2_->params(out);
        return out;
    }

    std::vector<state_block> state() {
        std::vector<state_block> out;
        for (auto& blk : blocks_) {
            for (auto& c : blk.convs) c->state(out);
            blk.bn->state(out);
        }
        fc1_->state(out);
        fc2_->state(out);
        return out;
    }

private:
    struct block {
        std::vector<std::unique_ptr<conv3d>> convs;
        std::vector<relu> acts;
        maxpool3d pool;
        std::unique_ptr<batchnorm> bn;
    };

    cube_net_spec spec_;
    std::vector<block> blocks_;
    global_maxpool3d gmp_;
    std::unique_ptr<dense> fc1_, fc2_;
    relu fc_act_;
    int hidden_width_ = 0;
};

}  // namespace mipcad::nn
