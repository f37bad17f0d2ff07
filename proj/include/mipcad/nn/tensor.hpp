#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "mipcad/core/error.hpp"

namespace mipcad::nn {

// Dense float tensor, row-major, last axis fastest. Layouts used here:
// (n, c, h, w) for 2-D feature maps and (n, c, d, h, w) for 3-D.
struct tensor {
    std::vector<int> shape;
    std::vector<float> data;

    tensor() = default;
    explicit tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(size_t(numel_of(shape)), 0.f);
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    }

    int64_t numel() const { return int64_t(data.size()); }
    int dim(int i) const { return shape[size_t(i)]; }
    int rank() const { return int(shape.size()); }

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }

    void fill(float v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const tensor& o) const { return shape == o.shape; }
};

// A trainable parameter with its gradient accumulator.
struct param_block {
    std::vector<float>* value = nullptr;
    std::vector<float>* grad = nullptr;
};

// Serializable state: trainable parameters plus buffers (BN running stats).
struct state_block {
    const char* name;
    std::vector<float>* value;
};

}  // namespace mipcad::nn
