#pragma once

#include <filesystem>
#include <fstream>
#include <vector>

#include "json.hpp"

#include "mipcad/core/error.hpp"

namespace mipcad {

struct train_epoch {
    int epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    double lr = 0;
};

// Line-delimited training log: one JSON object per epoch.
inline void write_training_log(const std::filesystem::path& path,
                               const std::vector<train_epoch>& log) {
    std::ofstream os(path);
    if (!os) throw format_error("cannot write " + path.string());
    for (const auto& e : log) {
        nlohmann::json j;
        j["epoch"] = e.epoch;
        j["train_loss"] = e.train_loss;
        j["val_loss"] = e.val_loss;
        j["lr"] = e.lr;
        os << j.dump() << '\n';
    }
}

inline std::vector<train_epoch> read_training_log(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw format_error("cannot read " + path.string());
    std::vector<train_epoch> log;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw format_error(path.string() + ": bad log line");
        log.push_back({j.value("epoch", 0), j.value("train_loss", 0.0), j.value("val_loss", 0.0),
                       j.value("lr", 0.0)});
    }
    return log;
}

}  // namespace mipcad
