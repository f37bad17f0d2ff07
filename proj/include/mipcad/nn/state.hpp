#pragma once

#include <vector>

#include "mipcad/core/error.hpp"

namespace mipcad::nn {

// Deep-copy of every state vector, usable to restore the best epoch.
template <typename Net>
std::vector<std::vector<float>> snapshot_state(Net& net) {
    std::vector<std::vector<float>> snap;
    for (auto& s : net.state()) snap.push_back(*s.value);
    return snap;
}

template <typename Net>
void restore_state(Net& net, const std::vector<std::vector<float>>& snap) {
    auto blocks = net.state();
    if (blocks.size() != snap.size()) throw contract_error("restore_state: block count mismatch");
    for (size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].value->size() != snap[i].size())
            throw contract_error("restore_state: block size mismatch");
        *blocks[i].value = snap[i];
    }
}

}  // namespace mipcad::nn
