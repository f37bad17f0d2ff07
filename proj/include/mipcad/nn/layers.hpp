#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mipcad/core/error.hpp"
#include "mipcad/nn/init.hpp"
#include "mipcad/nn/tensor.hpp"

namespace mipcad::nn {

using emat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using emap = Eigen::Map<emat>;
using ecmap = Eigen::Map<const emat>;
using estride = Eigen::OuterStride<>;

// Layers cache what their backward pass needs when forward runs with
// train == true; backward must mirror the latest forward call.

// ---------------------------------------------------------------------------
// 2-D convolution, odd kernel, same padding, stride 1.
class conv2d {
public:
    conv2d(int cin, int cout, int k, std::mt19937_64& rng)
        : cin_(cin), cout_(cout), k_(k), pad_((k - 1) / 2),
          w_(size_t(cout) * cin * k * k), b_(size_t(cout), 0.f),
          dw_(w_.size(), 0.f), db_(size_t(cout), 0.f) {
        he_fill(rng, w_, int64_t(k) * k * cin);
    }

    int64_t fan_in() const { return int64_t(k_) * k_ * cin_; }
    int kernel() const { return k_; }
    int out_channels() const { return cout_; }

    tensor forward(const tensor& x, bool train) {
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        if (x.dim(1) != cin_) throw contract_error("conv2d: channel mismatch");
        if (train) x_cache_ = x;
        h_ = h;
        w_now_ = w;
        tensor y({n, cout_, h, w});
        const int K = cin_ * k_ * k_;
        const int64_t hw = int64_t(h) * w;
        ecmap wm(w_.data(), cout_, K);
        std::vector<float> cols;
        for (int s = 0; s < n; ++s) {
            const float* xs = x.ptr() + int64_t(s) * cin_ * hw;
            float* ys = y.ptr() + int64_t(s) * cout_ * hw;
            for (int64_t p0 = 0; p0 < hw; p0 += tile_) {
                const int t = int(std::min<int64_t>(tile_, hw - p0));
                im2col(xs, h, w, p0, t, cols);
                Eigen::Map<emat, 0, estride> yblk(ys + p0, cout_, t, estride(hw));
                ecmap cm(cols.data(), K, t);
                yblk.noalias() = wm * cm;
            }
            for (int co = 0; co < cout_; ++co) {
                float* row = ys + int64_t(co) * hw;
                const float bias = b_[size_t(co)];
                for (int64_t p = 0; p < hw; ++p) row[p] += bias;
            }
        }
        return y;
    }

    tensor backward(const tensor& dy) {
        const tensor& x = x_cache_;
        const int n = x.dim(0), h = h_, w = w_now_;
        const int K = cin_ * k_ * k_;
        const int64_t hw = int64_t(h) * w;
        tensor dx(x.shape);
        ecmap wm(w_.data(), cout_, K);
        emap dwm(dw_.data(), cout_, K);
        std::vector<float> cols, dcols(size_t(K) * tile_);
        for (int s = 0; s < n; ++s) {
            const float* xs = x.ptr() + int64_t(s) * cin_ * hw;
            const float* dys = dy.ptr() + int64_t(s) * cout_ * hw;
            float* dxs = dx.ptr() + int64_t(s) * cin_ * hw;
            for (int64_t p0 = 0; p0 < hw; p0 += tile_) {
                const int t = int(std::min<int64_t>(tile_, hw - p0));
                im2col(xs, h, w, p0, t, cols);
                Eigen::Map<const emat, 0, estride> dyblk(dys + p0, cout_, t, estride(hw));
                ecmap cm(cols.data(), K, t);
                dwm.noalias() += dyblk * cm.transpose();
                emap dcm(dcols.data(), K, t);
                dcm.noalias() = wm.transpose() * dyblk;
                col2im_add(dcols.data(), h, w, p0, t, dxs);
            }
            for (int co = 0; co < cout_; ++co) {
                const float* row = dys + int64_t(co) * hw;
                double acc = 0;
                for (int64_t p = 0; p < hw; ++p) acc += row[p];
                db_[size_t(co)] += float(acc);
            }
        }
        return dx;
    }

    void params(std::vector<param_block>& out) {
        out.push_back({&w_, &dw_});
        out.push_back({&b_, &db_});
    }
    void state(std::vector<state_block>& out) {
        out.push_back({"conv2d.w", &w_});
        out.push_back({"conv2d.b", &b_});
    }

private:
    void im2col(const float* xs, int h, int w, int64_t p0, int t, std::vector<float>& cols) const {
        const int K = cin_ * k_ * k_;
        cols.assign(size_t(K) * t, 0.f);
        const int64_t hw = int64_t(h) * w;
        for (int ci = 0; ci < cin_; ++ci)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    float* dst = cols.data() + (size_t(ci) * k_ * k_ + size_t(ky) * k_ + kx) * t;
                    for (int i = 0; i < t; ++i) {
                        const int64_t p = p0 + i;
                        const int oy = int(p / w), ox = int(p % w);
                        const int iy = oy + ky - pad_, ix = ox + kx - pad_;
                        if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                            dst[i] = xs[int64_t(ci) * hw + int64_t(iy) * w + ix];
                    }
                }
    }

    void col2im_add(const float* dcols, int h, int w, int64_t p0, int t, float* dxs) const {
        const int64_t hw = int64_t(h) * w;
        for (int ci = 0; ci < cin_; ++ci)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    const float* src = dcols + (size_t(ci) * k_ * k_ + size_t(ky) * k_ + kx) * t;
                    for (int i = 0; i < t; ++i) {
                        const int64_t p = p0 + i;
                        const int oy = int(p / w), ox = int(p % w);
                        const int iy = oy + ky - pad_, ix = ox + kx - pad_;
                        if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                            dxs[int64_t(ci) * hw + int64_t(iy) * w + ix] += src[i];
                    }
                }
    }

    static constexpr int64_t tile_ = 8192;
    int cin_, cout_, k_, pad_;
    int h_ = 0, w_now_ = 0;
    std::vector<float> w_, b_, dw_, db_;
    tensor x_cache_;
};

// ---------------------------------------------------------------------------
// 3-D convolution, odd kernel, same padding, stride 1.
class conv3d {
public:
    conv3d(int cin, int cout, int k, std::mt19937_64& rng)
        : cin_(cin), cout_(cout), k_(k), pad_((k - 1) / 2),
          w_(size_t(cout) * cin * k * k * k), b_(size_t(cout), 0.f),
          dw_(w_.size(), 0.f), db_(size_t(cout), 0.f) {
        he_fill(rng, w_, int64_t(k) * k * k * cin);
    }

    int out_channels() const { return cout_; }

    tensor forward(const tensor& x, bool train) {
        const int n = x.dim(0), d = x.dim(2), h = x.dim(3), w = x.dim(4);
        if (x.dim(1) != cin_) throw contract_error("conv3d: channel mismatch");
        if (train) x_cache_ = x;
        d_ = d; h_ = h; w_now_ = w;
        tensor y({n, cout_, d, h, w});
        const int K = cin_ * k_ * k_ * k_;
        const int64_t dhw = int64_t(d) * h * w;
        ecmap wm(w_.data(), cout_, K);
        std::vector<float> cols;
        for (int s = 0; s < n; ++s) {
            const float* xs = x.ptr() + int64_t(s) * cin_ * dhw;
            float* ys = y.ptr() + int64_t(s) * cout_ * dhw;
            for (int64_t p0 = 0; p0 < dhw; p0 += tile_) {
                const int t = int(std::min<int64_t>(tile_, dhw - p0));
                im2col(xs, d, h, w, p0, t, cols);
                Eigen::Map<emat, 0, estride> yblk(ys + p0, cout_, t, estride(dhw));
                ecmap cm(cols.data(), K, t);
                yblk.noalias() = wm * cm;
            }
            for (int co = 0; co < cout_; ++co) {
                float* row = ys + int64_t(co) * dhw;
                const float bias = b_[size_t(co)];
                for (int64_t p = 0; p < dhw; ++p) row[p] += bias;
            }
        }
        return y;
    }

    tensor backward(const tensor& dy) {
        const tensor& x = x_cache_;
        const int n = x.dim(0), d = d_, h = h_, w = w_now_;
        const int K = cin_ * k_ * k_ * k_;
        const int64_t dhw = int64_t(d) * h * w;
        tensor dx(x.shape);
        ecmap wm(w_.data(), cout_, K);
        emap dwm(dw_.data(), cout_, K);
        std::vector<float> cols, dcols(size_t(K) * tile_);
        for (int s = 0; s < n; ++s) {
            const float* xs = x.ptr() + int64_t(s) * cin_ * dhw;
            const float* dys = dy.ptr() + int64_t(s) * cout_ * dhw;
            float* dxs = dx.ptr() + int64_t(s) * cin_ * dhw;
            for (int64_t p0 = 0; p0 < dhw; p0 += tile_) {
                const int t = int(std::min<int64_t>(tile_, dhw - p0));
                im2col(xs, d, h, w, p0, t, cols);
                Eigen::Map<const emat, 0, estride> dyblk(dys + p0, cout_, t, estride(dhw));
                ecmap cm(cols.data(), K, t);
                dwm.noalias() += dyblk * cm.transpose();
                emap dcm(dcols.data(), K, t);
                dcm.noalias() = wm.transpose() * dyblk;
                col2im_add(dcols.data(), d, h, w, p0, t, dxs);
            }
            for (int co = 0; co < cout_; ++co) {
                const float* row = dys + int64_t(co) * dhw;
                double acc = 0;
                for (int64_t p = 0; p < dhw; ++p) acc += row[p];
                db_[size_t(co)] += float(acc);
            }
        }
        return dx;
    }

    void params(std::vector<param_block>& out) {
        out.push_back({&w_, &dw_});
        out.push_back({&b_, &db_});
    }
    void state(std::vector<state_block>& out) {
        out.push_back({"conv3d.w", &w_});
        out.push_back({"conv3d.b", &b_});
    }

private:
    void im2col(const float* xs, int d, int h, int w, int64_t p0, int t,
                std::vector<float>& cols) const {
        const int K = cin_ * k_ * k_ * k_;
        cols.assign(size_t(K) * t, 0.f);
        const int64_t hw = int64_t(h) * w, dhw = int64_t(d) * hw;
        int r = 0;
        for (int ci = 0; ci < cin_; ++ci)
            for (int kz = 0; kz < k_; ++kz)
                for (int ky = 0; ky < k_; ++ky)
                    for (int kx = 0; kx < k_; ++kx, ++r) {
                        float* dst = cols.data() + size_t(r) * t;
                        for (int i = 0; i < t; ++i) {
                            const int64_t p = p0 + i;
                            const int oz = int(p / hw);
                            const int oy = int((p % hw) / w), ox = int(p % w);
                            const int iz = oz + kz - pad_, iy = oy + ky - pad_,
                                      ix = ox + kx - pad_;
                            if (iz >= 0 && iz < d && iy >= 0 && iy < h && ix >= 0 && ix < w)
                                dst[i] = xs[int64_t(ci) * dhw + int64_t(iz) * hw +
                                            int64_t(iy) * w + ix];
                        }
                    }
    }

    void col2im_add(const float* dcols, int d, int h, int w, int64_t p0, int t,
                    float* dxs) const {
        const int64_t hw = int64_t(h) * w, dhw = int64_t(d) * hw;
        int r = 0;
        for (int ci = 0; ci < cin_; ++ci)
            for (int kz = 0; kz < k_; ++kz)
                for (int ky = 0; ky < k_; ++ky)
                    for (int kx = 0; kx < k_; ++kx, ++r) {
                        const float* src = dcols + size_t(r) * t;
                        for (int i = 0; i < t; ++i) {
                            const int64_t p = p0 + i;
                            const int oz = int(p / hw);
                            const int oy = int((p % hw) / w), ox = int(p % w);
                            const int iz = oz + kz - pad_, iy = oy + ky - pad_,
                                      ix = ox + kx - pad_;
                            if (iz >= 0 && iz < d && iy >= 0 && iy < h && ix >= 0 && ix < w)
                                dxs[int64_t(ci) * dhw + int64_t(iz) * hw + int64_t(iy) * w +
                                    ix] += src[i];
                        }
                    }
    }

    static constexpr int64_t tile_ = 8192;
    int cin_, cout_, k_, pad_;
    int d_ = 0, h_ = 0, w_now_ = 0;
    std::vector<float> w_, b_, dw_, db_;
    tensor x_cache_;
};

// ---------------------------------------------------------------------------
// Batch normalization over (N, spatial) per channel; works for 2-D and 3-D
// maps since only the channel axis matters.
class batchnorm {
public:
    explicit batchnorm(int channels)
        : c_(channels), gamma_(size_t(channels), 1.f), beta_(size_t(channels), 0.f),
          dgamma_(size_t(channels), 0.f), dbeta_(size_t(channels), 0.f),
          run_mean_(size_t(channels), 0.f), run_var_(size_t(channels), 1.f) {}

    tensor forward(const tensor& x, bool train) {
        if (x.dim(1) != c_) throw contract_error("batchnorm: channel mismatch");
        const int n = x.dim(0);
        int64_t spatial = 1;
        for (int i = 2; i < x.rank(); ++i) spatial *= x.dim(i);
        const int64_t m = int64_t(n) * spatial;

        tensor y(x.shape);
        if (train) {
            xhat_ = tensor(x.shape);
            inv_std_.assign(size_t(c_), 0.f);
            count_ = m;
        }
        for (int ch = 0; ch < c_; ++ch) {
            float mean, var;
            if (train) {
                double s = 0, sq = 0;
                for_channel(x, ch, spatial, [&](const float* p, int64_t len) {
                    for (int64_t i = 0; i < len; ++i) {
                        s += p[i];
                        sq += double(p[i]) * p[i];
                    }
                });
                mean = float(s / double(m));
                var = float(std::max(0.0, sq / double(m) - double(mean) * mean));
                run_mean_[size_t(ch)] = (1.f - momentum_) * run_mean_[size_t(ch)] + momentum_ * mean;
                run_var_[size_t(ch)] = (1.f - momentum_) * run_var_[size_t(ch)] + momentum_ * var;
            } else {
                mean = run_mean_[size_t(ch)];
                var = run_var_[size_t(ch)];
            }
            const float inv = 1.f / std::sqrt(var + eps_);
            const float g = gamma_[size_t(ch)], b = beta_[size_t(ch)];
            if (train) inv_std_[size_t(ch)] = inv;
            for (int s2 = 0; s2 < n; ++s2) {
                const float* src = x.ptr() + (int64_t(s2) * c_ + ch) * spatial;
                float* dst = y.ptr() + (int64_t(s2) * c_ + ch) * spatial;
                float* xh = train ? xhat_.ptr() + (int64_t(s2) * c_ + ch) * spatial : nullptr;
                for (int64_t i = 0; i < spatial; ++i) {
                    const float h = (src[i] - mean) * inv;
                    if (xh) xh[i] = h;
                    dst[i] = g * h + b;
                }
            }
        }
        return y;
    }

    tensor backward(const tensor& dy) {
        const int n = dy.dim(0);
        int64_t spatial = 1;
        for (int i = 2; i < dy.rank(); ++i) spatial *= dy.dim(i);
        const double m = double(count_);
        tensor dx(dy.shape);
        for (int ch = 0; ch < c_; ++ch) {
            double sum_dy = 0, sum_dy_xh = 0;
            for (int s = 0; s < n; ++s) {
                const float* dyp = dy.ptr() + (int64_t(s) * c_ + ch) * spatial;
                const float* xh = xhat_.ptr() + (int64_t(s) * c_ + ch) * spatial;
                for (int64_t i = 0; i < spatial; ++i) {
                    sum_dy += dyp[i];
                    sum_dy_xh += double(dyp[i]) * xh[i];
                }
            }
            dbeta_[size_t(ch)] += float(sum_dy);
            dgamma_[size_t(ch)] += float(sum_dy_xh);
            const float g_inv = gamma_[size_t(ch)] * inv_std_[size_t(ch)];
            const float mean_dy = float(sum_dy / m), mean_dy_xh = float(sum_dy_xh / m);
            for (int s = 0; s < n; ++s) {
                const float* dyp = dy.ptr() + (int64_t(s) * c_ + ch) * spatial;
                const float* xh = xhat_.ptr() + (int64_t(s) * c_ + ch) * spatial;
                float* dxp = dx.ptr() + (int64_t(s) * c_ + ch) * spatial;
                for (int64_t i = 0; i < spatial; ++i)
                    dxp[i] = g_inv * (dyp[i] - mean_dy - xh[i] * mean_dy_xh);
            }
        }
        return dx;
    }

    void params(std::vector<param_block>& out) {
        out.push_back({&gamma_, &dgamma_});
        out.push_back({&beta_, &dbeta_});
    }
    void state(std::vector<state_block>& out) {
        out.push_back({"bn.gamma", &gamma_});
        out.push_back({"bn.beta", &beta_});
        out.push_back({"bn.run_mean", &run_mean_});
        out.push_back({"bn.run_var", &run_var_});
    }

private:
    template <typename F>
    void for_channel(const tensor& x, int ch, int64_t spatial, F&& f) const {
        const int n = x.dim(0);
        for (int s = 0; s < n; ++s) f(x.ptr() + (int64_t(s) * c_ + ch) * spatial, spatial);
    }

    static constexpr float eps_ = 1e-5f;
    static constexpr float momentum_ = 0.1f;
    int c_;
    int64_t count_ = 0;
    std::vector<float> gamma_, beta_, dgamma_, dbeta_, run_mean_, run_var_, inv_std_;
    tensor xhat_;
};

// ---------------------------------------------------------------------------
class relu {
public:
    tensor forward(const tensor& x, bool train) {
        tensor y(x.shape);
        for (int64_t i = 0; i < x.numel(); ++i) y.data[size_t(i)] = std::max(0.f, x.data[size_t(i)]);
        if (train) y_cache_ = y;
        return y;
    }
    tensor backward(const tensor& dy) {
        tensor dx(dy.shape);
        for (int64_t i = 0; i < dy.numel(); ++i)
            dx.data[size_t(i)] = y_cache_.data[size_t(i)] > 0.f ? dy.data[size_t(i)] : 0.f;
        return dx;
    }

private:
    tensor y_cache_;
};

class sigmoid {
public:
    tensor forward(const tensor& x, bool train) {
        tensor y(x.shape);
        for (int64_t i = 0; i < x.numel(); ++i)
            y.data[size_t(i)] = 1.f / (1.f + std::exp(-x.data[size_t(i)]));
        if (train) y_cache_ = y;
        return y;
    }
    tensor backward(const tensor& dy) {
        tensor dx(dy.shape);
        for (int64_t i = 0; i < dy.numel(); ++i) {
            const float s = y_cache_.data[size_t(i)];
            dx.data[size_t(i)] = dy.data[size_t(i)] * s * (1.f - s);
        }
        return dx;
    }

private:
    tensor y_cache_;
};

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2. Input height/width must be even.
class maxpool2d {
public:
    tensor forward(const tensor& x, bool train) {
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        if (h % 2 || w % 2) throw contract_error("maxpool2d: odd input size");
        const int oh = h / 2, ow = w / 2;
        tensor y({n, c, oh, ow});
        if (train) {
            arg_.assign(y.data.size(), 0);
            in_shape_ = x.shape;
        }
        int64_t oi = 0;
        for (int s = 0; s < n; ++s)
            for (int ch = 0; ch < c; ++ch) {
                const float* plane = x.ptr() + (int64_t(s) * c + ch) * h * w;
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox, ++oi) {
                        int64_t best = int64_t(2 * oy) * w + 2 * ox;
                        float bv = plane[best];
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const int64_t idx = int64_t(2 * oy + dy) * w + 2 * ox + dx;
                                if (plane[idx] > bv) {
                                    bv = plane[idx];
                                    best = idx;
                                }
                            }
                        y.data[size_t(oi)] = bv;
                        if (train) arg_[size_t(oi)] = best;
                    }
            }
        return y;
    }

    tensor backward(const tensor& dy) {
        tensor dx(in_shape_);
        const int n = dy.dim(0), c = dy.dim(1);
        const int64_t plane_in = int64_t(in_shape_[2]) * in_shape_[3];
        const int64_t plane_out = int64_t(dy.dim(2)) * dy.dim(3);
        for (int s = 0; s < n; ++s)
            for (int ch = 0; ch < c; ++ch) {
                const int64_t base_out = (int64_t(s) * c + ch) * plane_out;
                float* dxp = dx.ptr() + (int64_t(s) * c + ch) * plane_in;
                for (int64_t i = 0; i < plane_out; ++i)
                    dxp[arg_[size_t(base_out + i)]] += dy.data[size_t(base_out + i)];
            }
        return dx;
    }

private:
    std::vector<int64_t> arg_;
    std::vector<int> in_shape_;
};

// 2x2x2 max pooling, stride 2.
class maxpool3d {
public:
    tensor forward(const tensor& x, bool train) {
        const int n = x.dim(0), c = x.dim(1), d = x.dim(2), h = x.dim(3), w = x.dim(4);
        if (d % 2 || h % 2 || w % 2) throw contract_error("maxpool3d: odd input size");
        const int od = d / 2, oh = h / 2, ow = w / 2;
        tensor y({n, c, od, oh, ow});
        if (train) {
            arg_.assign(y.data.size(), 0);
            in_shape_ = x.shape;
        }
        int64_t oi = 0;
        const int64_t hw = int64_t(h) * w;
        for (int s = 0; s < n; ++s)
            for (int ch = 0; ch < c; ++ch) {
                const float* grid = x.ptr() + (int64_t(s) * c + ch) * d * hw;
                for (int oz = 0; oz < od; ++oz)
                    for (int oy = 0; oy < oh; ++oy)
                        for (int ox = 0; ox < ow; ++ox, ++oi) {
                            int64_t best = int64_t(2 * oz) * hw + int64_t(2 * oy) * w + 2 * ox;
                            float bv = grid[best];
                            for (int dz = 0; dz < 2; ++dz)
                                for (int dy = 0; dy < 2; ++dy)
                                    for (int dx = 0; dx < 2; ++dx) {
                                        const int64_t idx = int64_t(2 * oz + dz) * hw +
                                                            int64_t(2 * oy + dy) * w + 2 * ox + dx;
                                        if (grid[idx] > bv) {
                                            bv = grid[idx];
                                            best = idx;
                                        }
                                    }
                            y.data[size_t(oi)] = bv;
                            if (train) arg_[size_t(oi)] = best;
                        }
            }
        return y;
    }

    tensor backward(const tensor& dy) {
        tensor dx(in_shape_);
        const int n = dy.dim(0), c = dy.dim(1);
        const int64_t plane_in = int64_t(in_shape_[2]) * in_shape_[3] * in_shape_[4];
        const int64_t plane_out = int64_t(dy.dim(2)) * dy.dim(3) * dy.dim(4);
        for (int s = 0; s < n; ++s)
            for (int ch = 0; ch < c; ++ch) {
                const int64_t base_out = (int64_t(s) * c + ch) * plane_out;
                float* dxp = dx.ptr() + (int64_t(s) * c + ch) * plane_in;
                for (int64_t i = 0; i < plane_out; ++i)
                    dxp[arg_[size_t(base_out + i)]] += dy.data[size_t(base_out + i)];
            }
        return dx;
    }

private:
    std::vector<int64_t> arg_;
    std::vector<int> in_shape_;
};

// ---------------------------------------------------------------------------
// Nearest-neighbor 2x upsampling.
class upsample2d {
public:
    tensor forward(const tensor& x, bool) {
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        in_shape_ = x.shape;
        tensor y({n, c, 2 * h, 2 * w});
        for (int s = 0; s < n; ++s)
            for (int ch = 0; ch < c; ++ch) {
                const float* src = x.ptr() + (int64_t(s) * c + ch) * h * w;
                float* dst = y.ptr() + (int64_t(s) * c + ch) * 4 * h * w;
                for (int yy = 0; yy < 2 * h; ++yy) {
                    const float* srow = src + int64_t(yy / 2) * w;
                    float* drow = dst + int64_t(yy) * 2 * w;
                    for (int xx = 0; xx < 2 * w; ++xx) drow[xx] = srow[xx / 2];
                }
            }
        return y;
    }

    tensor backward(const tensor& dy) {
        tensor dx(in_shape_);
        const int n = dx.dim(0), c = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
        for (int s = 0; s < n; ++s)
            for (int ch = 0; ch < c; ++ch) {
                float* dst = dx.ptr() + (int64_t(s) * c + ch) * h * w;
                const float* src = dy.ptr() + (int64_t(s) * c + ch) * 4 * h * w;
                for (int yy = 0; yy < 2 * h; ++yy) {
                    const float* srow = src + int64_t(yy) * 2 * w;
                    float* drow = dst + int64_t(yy / 2) * w;
                    for (int xx = 0; xx < 2 * w; ++xx) drow[xx / 2] += srow[xx];
                }
            }
        return dx;
    }

private:
    std::vector<int> in_shape_;
};

// ---------------------------------------------------------------------------
// Global max pooling for 3-D maps: (n,c,d,h,w) -> (n,c).
class global_maxpool3d {
public:
    tensor forward(const tensor& x, bool train) {
        const int n = x.dim(0), c = x.dim(1);
        const int64_t vol = int64_t(x.dim(2)) * x.dim(3) * x.dim(4);
        in_shape_ = x.shape;
        tensor y({n, c});
        if (train) arg_.assign(size_t(n) * c, 0);
        for (int s = 0; s < n; ++s)
            for (int ch = 0; ch < c; ++ch) {
                const float* p = x.ptr() + (int64_t(s) * c + ch) * vol;
                int64_t best = 0;
                for (int64_t i = 1; i < vol; ++i)
                    if (p[i] > p[best]) best = i;
                y.data[size_t(s) * c + ch] = p[best];
                if (train) arg_[size_t(s) * c + ch] = best;
            }
        return y;
    }

    tensor backward(const tensor& dy) {
        tensor dx(in_shape_);
        const int n = dy.dim(0), c = dy.dim(1);
        const int64_t vol = int64_t(in_shape_[2]) * in_shape_[3] * in_shape_[4];
        for (int s = 0; s < n; ++s)
            for (int ch = 0; ch < c; ++ch)
                dx.ptr()[(int64_t(s) * c + ch) * vol + arg_[size_t(s) * c + ch]] =
                    dy.data[size_t(s) * c + ch];
        return dx;
    }

private:
    std::vector<int64_t> arg_;
    std::vector<int> in_shape_;
};

// ---------------------------------------------------------------------------
// Fully connected layer: (n, in) -> (n, out).
class dense {
public:
    dense(int in, int out, std::mt19937_64& rng)
        : in_(in), out_(out), w_(size_t(out) * in), b_(size_t(out), 0.f),
          dw_(w_.size(), 0.f), db_(size_t(out), 0.f) {
        he_fill(rng, w_, in);
    }

    tensor forward(const tensor& x, bool train) {
        const int n = x.dim(0);
        if (x.dim(1) != in_) throw contract_error("dense: input width mismatch");
        if (train) x_cache_ = x;
        tensor y({n, out_});
        ecmap xm(x.ptr(), n, in_);
        ecmap wm(w_.data(), out_, in_);
        emap ym(y.ptr(), n, out_);
        ym.noalias() = xm * wm.transpose();
        for (int s = 0; s < n; ++s)
            for (int o = 0; o < out_; ++o) y.data[size_t(s) * out_ + o] += b_[size_t(o)];
        return y;
    }

    tensor backward(const tensor& dy) {
        const int n = dy.dim(0);
        ecmap dym(dy.ptr(), n, out_);
        ecmap xm(x_cache_.ptr(), n, in_);
        emap dwm(dw_.data(), out_, in_);
        dwm.noalias() += dym.transpose() * xm;
        for (int s = 0; s < n; ++s)
            for (int o = 0; o < out_; ++o) db_[size_t(o)] += dy.data[size_t(s) * out_ + o];
        tensor dx({n, in_});
        emap dxm(dx.ptr(), n, in_);
        ecmap wm(w_.data(), out_, in_);
        dxm.noalias() = dym * wm;
        return dx;
    }

    void params(std::vector<param_block>& out) {
        out.push_back({&w_, &dw_});
        out.push_back({&b_, &db_});
    }
    void state(std::vector<state_block>& out) {
        out.push_back({"dense.w", &w_});
        out.push_back({"dense.b", &b_});
    }

private:
    int in_, out_;
    std::vector<float> w_, b_, dw_, db_;
    tensor x_cache_;
};

// ---------------------------------------------------------------------------
// Channel concatenation helpers for skip connections.
inline tensor concat_channels(const tensor& a, const tensor& b) {
    const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    int64_t spatial = 1;
    for (int i = 2; i < a.rank(); ++i) spatial *= a.dim(i);
    std::vector<int> shape = a.shape;
    shape[1] = ca + cb;
    tensor y(shape);
    for (int s = 0; s < n; ++s) {
        std::copy(a.ptr() + int64_t(s) * ca * spatial, a.ptr() + int64_t(s + 1) * ca * spatial,
                  y.ptr() + int64_t(s) * (ca + cb) * spatial);
        std::copy(b.ptr() + int64_t(s) * cb * spatial, b.ptr() + int64_t(s + 1) * cb * spatial,
                  y.ptr() + (int64_t(s) * (ca + cb) + ca) * spatial);
    }
    return y;
}

inline std::pair<tensor, tensor> split_channels(const tensor& dy, int ca) {
    const int n = dy.dim(0), c = dy.dim(1), cb = c - ca;
    int64_t spatial = 1;
    for (int i = 2; i < dy.rank(); ++i) spatial *= dy.dim(i);
    std::vector<int> sa = dy.shape, sb = dy.shape;
    sa[1] = ca;
    sb[1] = cb;
    tensor da(sa), db_t(sb);
    for (int s = 0; s < n; ++s) {
        std::copy(dy.ptr() + int64_t(s) * c * spatial,
                  dy.ptr() + (int64_t(s) * c + ca) * spatial,
                  da.ptr() + int64_t(s) * ca * spatial);
        std::copy(dy.ptr() + (int64_t(s) * c + ca) * spatial,
                  dy.ptr() + int64_t(s + 1) * c * spatial,
                  db_t.ptr() + int64_t(s) * cb * spatial);
    }
    return {std::move(da), std::move(db_t)};
}

}  // namespace mipcad::nn
