#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mipcad/core/error.hpp"

namespace mipcad {

// One cross-validation fold: one subset held out for testing, the remaining
// scans split 70/30 into training and validation (63%/27% of the whole when
// subsets are tenths).
struct fold_plan {
    std::vector<std::string> train, val, test;
    int fold = 0;
};

inline fold_plan make_fold_plan(const std::vector<std::vector<std::string>>& subsets, int fold,
                                uint64_t seed) {
    if (fold < 0 || fold >= int(subsets.size()))
        throw parameter_error("make_fold_plan: fold index out of range");
    std::set<std::string> seen;
    for (const auto& s : subsets)
        for (const auto& id : s)
            if (!seen.insert(id).second)
                throw contract_error("make_fold_plan: subsets overlap on scan " + id);

    fold_plan plan;
    plan.fold = fold;
    plan.test = subsets[size_t(fold)];
    std::vector<std::string> rest;
    for (size_t i = 0; i < subsets.size(); ++i)
        if (int(i) != fold) rest.insert(rest.end(), subsets[i].begin(), subsets[i].end());
    std::mt19937_64 rng(seed + uint64_t(fold) * 0x9e3779b9u);
    std::shuffle(rest.begin(), rest.end(), rng);
    const int n_train = int(std::llround(0.7 * double(rest.size())));
    plan.train.assign(rest.begin(), rest.begin() + n_train);
    plan.val.assign(rest.begin() + n_train, rest.end());
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.val.begin(), plan.val.end());
    return plan;
}

// Round-robin partition of the (sorted) scan list into k subsets.
inline std::vector<std::vector<std::string>> split_subsets(std::vector<std::string> scans, int k) {
    if (k < 2) throw parameter_error("split_subsets: need at least 2 subsets");
    std::sort(scans.begin(), scans.end());
    std::vector<std::vector<std::string>> out(static_cast<size_t>(k));
    for (size_t i = 0; i < scans.size(); ++i) out[i % size_t(k)].push_back(scans[i]);
    return out;
}

}  // namespace mipcad
