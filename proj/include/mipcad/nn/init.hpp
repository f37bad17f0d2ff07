#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mipcad/core/error.hpp"

namespace mipcad::nn {

// Weight standard deviation for rectified-linear layers: Var[w] = 2 / fan_in.
inline double he_std(int64_t fan_in) {
    if (fan_in < 1) throw parameter_error("he_std: fan-in must be >= 1");
    return std::sqrt(2.0 / double(fan_in));
}

inline void he_fill(std::mt19937_64& rng, std::vector<float>& w, int64_t fan_in) {
    std::normal_distribution<double> dist(0.0, he_std(fan_in));
    for (float& x : w) x = float(dist(rng));
}

}  // namespace mipcad::nn
