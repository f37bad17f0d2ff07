#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mipcad/core/error.hpp"
#include "mipcad/core/hash.hpp"
#include "mipcad/detect/trainer2d.hpp"
#include "mipcad/fpr/trainer3d.hpp"
#include "mipcad/pipeline/folds.hpp"

namespace mipcad {

// Everything one pipeline run needs. Loaded from a JSON file; the
// MIPCAD_DATA_ROOT and MIPCAD_CACHE_ROOT environment variables override the
// corresponding paths.
struct pipeline_config {
    std::filesystem::path data_root;
    std::filesystem::path cache_root;
    std::filesystem::path annotations;  // defaults to data_root/annotations.csv
    std::vector<std::string> scans;     // defaults to every .mhd stem under data_root
    std::vector<int> thicknesses{1, 5, 10, 15};
    std::vector<std::vector<std::string>> subsets;  // defaults to n_subsets round-robin
    int n_subsets = 10;
    int fold = 0;
    uint64_t seed = 1;
    double merge_threshold = 0.5;
    int workers = 1;
    train_config_2d detect;
    train_config_3d fpr;

    fold_plan plan() const { return make_fold_plan(subsets, fold, seed); }
};

namespace detail {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace detail

inline void discover_scans(pipeline_config& cfg) {
    if (cfg.scans.empty()) {
        for (const auto& e : std::filesystem::directory_iterator(cfg.data_root))
            if (e.path().extension() == ".mhd") cfg.scans.push_back(e.path().stem().string());
        std::sort(cfg.scans.begin(), cfg.scans.end());
    }
    if (cfg.scans.empty())
        throw parameter_error("no scans found under " + cfg.data_root.string());
    if (cfg.subsets.empty())
        cfg.subsets = split_subsets(cfg.scans, std::min(cfg.n_subsets, int(cfg.scans.size())));
}

inline pipeline_config load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw format_error("cannot read config " + path.string());
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded()) throw format_error("config is not valid JSON: " + path.string());

    pipeline_config cfg;
    std::string s;
    detail::maybe(j, "data_root", s);
    cfg.data_root = s;
    s.clear();
    detail::maybe(j, "cache_root", s);
    cfg.cache_root = s;
    s.clear();
    detail::maybe(j, "annotations", s);
    if (!s.empty()) cfg.annotations = s;
    detail::maybe(j, "scans", cfg.scans);
    detail::maybe(j, "thicknesses", cfg.thicknesses);
    detail::maybe(j, "subsets", cfg.subsets);
    detail::maybe(j, "n_subsets", cfg.n_subsets);
    detail::maybe(j, "fold", cfg.fold);
    detail::maybe(j, "seed", cfg.seed);
    detail::maybe(j, "merge_threshold", cfg.merge_threshold);
    detail::maybe(j, "workers", cfg.workers);
    if (j.contains("detect")) {
        const auto& d = j.at("detect");
        detail::maybe(d, "batch_size", cfg.detect.batch_size);
        detail::maybe(d, "lr_initial", cfg.detect.lr_initial);
        detail::maybe(d, "lr_factor", cfg.detect.lr_factor);
        detail::maybe(d, "lr_patience", cfg.detect.lr_patience);
        detail::maybe(d, "lr_floor", cfg.detect.lr_floor);
        detail::maybe(d, "early_patience", cfg.detect.early_patience);
        detail::maybe(d, "max_epochs", cfg.detect.max_epochs);
        detail::maybe(d, "dice_eps", cfg.detect.dice_eps);
        detail::maybe(d, "max_translate_px", cfg.detect.max_translate_px);
        detail::maybe(d, "base_width", cfg.detect.base_width);
    }
    if (j.contains("fpr")) {
        const auto& f = j.at("fpr");
        detail::maybe(f, "batch_size", cfg.fpr.batch_size);
        detail::maybe(f, "lr_initial", cfg.fpr.lr_initial);
        detail::maybe(f, "lr_factor", cfg.fpr.lr_factor);
        detail::maybe(f, "lr_patience", cfg.fpr.lr_patience);
        detail::maybe(f, "lr_floor", cfg.fpr.lr_floor);
        detail::maybe(f, "early_patience", cfg.fpr.early_patience);
        detail::maybe(f, "max_epochs", cfg.fpr.max_epochs);
        detail::maybe(f, "target_neg_pos_ratio", cfg.fpr.target_neg_pos_ratio);
        detail::maybe(f, "width_divisor", cfg.fpr.width_divisor);
        detail::maybe(f, "dense_width", cfg.fpr.dense_width);
    }
    cfg.detect.seed = cfg.seed;
    cfg.fpr.seed = cfg.seed;

    if (const char* env = std::getenv("MIPCAD_DATA_ROOT")) cfg.data_root = env;
    if (const char* env = std::getenv("MIPCAD_CACHE_ROOT")) cfg.cache_root = env;
    if (cfg.data_root.empty()) throw parameter_error("config: data_root is required");
    if (cfg.cache_root.empty()) throw parameter_error("config: cache_root is required");
    if (cfg.annotations.empty()) cfg.annotations = cfg.data_root / "annotations.csv";
    for (int t : cfg.thicknesses)
        if (t < 1) throw parameter_error("config: slab thicknesses must be positive integers");

    discover_scans(cfg);
    return cfg;
}

// Stable digest of the effective configuration, embedded in reports and used
// in stage cache keys.
inline std::string config_digest(const pipeline_config& cfg) {
    nlohmann::json j;
    j["scans"] = cfg.scans;
    j["thicknesses"] = cfg.thicknesses;
    j["subsets"] = cfg.subsets;
    j["fold"] = cfg.fold;
    j["seed"] = cfg.seed;
    j["merge_threshold"] = cfg.merge_threshold;
    j["detect"] = {{"batch_size", cfg.detect.batch_size},
                   {"lr_initial", cfg.detect.lr_initial},
                   {"lr_factor", cfg.detect.lr_factor},
                   {"lr_patience", cfg.detect.lr_patience},
                   {"lr_floor", cfg.detect.lr_floor},
                   {"early_patience", cfg.detect.early_patience},
                   {"max_epochs", cfg.detect.max_epochs},
                   {"base_width", cfg.detect.base_width},
                   {"dice_eps", cfg.detect.dice_eps},
                   {"max_translate_px", cfg.detect.max_translate_px},
                   {"seed", cfg.detect.seed}};
    j["fpr"] = {{"batch_size", cfg.fpr.batch_size},
                {"lr_initial", cfg.fpr.lr_initial},
                {"lr_factor", cfg.fpr.lr_factor},
                {"lr_patience", cfg.fpr.lr_patience},
                {"lr_floor", cfg.fpr.lr_floor},
                {"early_patience", cfg.fpr.early_patience},
                {"max_epochs", cfg.fpr.max_epochs},
                {"width_divisor", cfg.fpr.width_divisor},
                {"dense_width", cfg.fpr.dense_width},
                {"target_neg_pos_ratio", cfg.fpr.target_neg_pos_ratio},
                {"seed", cfg.fpr.seed}};
    fnv1a h;
    const std::string dump = j.dump();
    h.update(dump.data(), dump.size());
    return h.hex();
}

}  // namespace mipcad
