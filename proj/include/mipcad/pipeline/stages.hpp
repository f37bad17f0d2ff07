#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "mipcad/core/error.hpp"
#include "mipcad/core/hash.hpp"
#include "mipcad/ct/annotations.hpp"
#include "mipcad/ct/volume.hpp"
#include "mipcad/detect/labels.hpp"
#include "mipcad/detect/trainer2d.hpp"
#include "mipcad/eval/froc.hpp"
#include "mipcad/eval/report.hpp"
#include "mipcad/fpr/trainer3d.hpp"
#include "mipcad/io/array_io.hpp"
#include "mipcad/merge/candidates.hpp"
#include "mipcad/mip/mip.hpp"
#include "mipcad/nn/serialize.hpp"
#include "mipcad/pipeline/config.hpp"
#include "mipcad/seg/lungseg.hpp"

namespace mipcad {

enum class stage {
    segment,
    mip,
    train_detect,
    detect,
    merge,
    train_fpr,
    score,
    froc_eval,
    report
};

inline const char* stage_name(stage s) {
    switch (s) {
        case stage::segment: return "segment";
        case stage::mip: return "mip";
        case stage::train_detect: return "train-detect";
        case stage::detect: return "detect";
        case stage::merge: return "merge";
        case stage::train_fpr: return "train-fpr";
        case stage::score: return "score";
        case stage::froc_eval: return "froc";
        case stage::report: return "report";
    }
    return "?";
}

inline stage parse_stage(const std::string& name) {
    for (stage s : {stage::segment, stage::mip, stage::train_detect, stage::detect, stage::merge,
                    stage::train_fpr, stage::score, stage::froc_eval, stage::report})
        if (name == stage_name(s)) return s;
    throw parameter_error("unknown stage: " + name);
}

namespace detail {

namespace fs = std::filesystem;

// ---- cache plumbing -------------------------------------------------------

inline bool cache_fresh(const fs::path& key_file, const std::string& key,
                        const std::vector<fs::path>& artifacts) {
    std::ifstream is(key_file);
    std::string stored;
    if (!is || !std::getline(is, stored) || stored != key) return false;
    for (const auto& a : artifacts)
        if (!fs::exists(a)) return false;
    return true;
}

inline void write_key(const fs::path& key_file, const std::string& key) {
    std::ofstream os(key_file);
    os << key << '\n';
}

inline std::string require_artifact(const fs::path& p, const char* producer) {
    if (!fs::exists(p))
        throw dependency_error("missing " + p.string() + "; run stage '" + producer +
                               "' first");
    return hash_file(p.string());
}

inline void log_line(std::ostream* log, const std::string& line) {
    if (log) *log << line << '\n';
}

// ---- artifact paths -------------------------------------------------------

struct paths {
    const pipeline_config& cfg;

    fs::path dir(const char* sub) const {
        const fs::path d = cfg.cache_root / sub;
        fs::create_directories(d);
        return d;
    }
    fs::path mhd(const std::string& s) const { return cfg.data_root / (s + ".mhd"); }
    fs::path norm(const std::string& s) const { return dir("segment") / (s + ".norm.arr"); }
    fs::path mask(const std::string& s) const { return dir("segment") / (s + ".mask.arr"); }
    fs::path seg_key(const std::string& s) const { return dir("segment") / (s + ".key"); }
    fs::path mip_arr(const std::string& s, int t) const {
        return dir("mip") / (s + ".t" + std::to_string(t) + ".arr");
    }
    fs::path mip_key(const std::string& s, int t) const {
        return dir("mip") / (s + ".t" + std::to_string(t) + ".key");
    }
    std::string fold_tag() const { return "f" + std::to_string(cfg.fold); }
    fs::path detect_model(int t) const {
        return dir("models") / (fold_tag() + ".detect.t" + std::to_string(t) + ".net");
    }
    fs::path detect_log(int t) const {
        return dir("models") / (fold_tag() + ".detect.t" + std::to_string(t) + ".log.jsonl");
    }
    fs::path detect_key(int t) const {
        return dir("models") / (fold_tag() + ".detect.t" + std::to_string(t) + ".key");
    }
    fs::path prob(const std::string& s, int t) const {
        return dir("detect") / (fold_tag() + "." + s + ".t" + std::to_string(t) + ".prob.arr");
    }
    fs::path prob_key(const std::string& s, int t) const {
        return dir("detect") / (fold_tag() + "." + s + ".t" + std::to_string(t) + ".key");
    }
    fs::path stream_cands(const std::string& s, int t) const {
        return dir("merge") / (fold_tag() + "." + s + ".t" + std::to_string(t) + ".cand.csv");
    }
    fs::path fused_cands(const std::string& s) const {
        return dir("merge") / (fold_tag() + "." + s + ".cand.csv");
    }
    fs::path merge_key(const std::string& s) const {
        return dir("merge") / (fold_tag() + "." + s + ".key");
    }
    fs::path fpr_model(int side) const {
        return dir("models") / (fold_tag() + ".fpr" + std::to_string(side) + ".net");
    }
    fs::path fpr_log(int side) const {
        return dir("models") / (fold_tag() + ".fpr" + std::to_string(side) + ".log.jsonl");
    }
    fs::path fpr_key() const { return dir("models") / (fold_tag() + ".fpr.key"); }
    fs::path scored(const std::string& s) const {
        return dir("score") / (fold_tag() + "." + s + ".cand.csv");
    }
    fs::path score_key(const std::string& s) const {
        return dir("score") / (fold_tag() + "." + s + ".key");
    }
    fs::path froc_csv() const { return dir("eval") / (fold_tag() + ".froc.csv"); }
    fs::path froc_json() const { return dir("eval") / (fold_tag() + ".froc.json"); }
    fs::path froc_key() const { return dir("eval") / (fold_tag() + ".froc.key"); }
    fs::path report_txt() const { return dir("eval") / (fold_tag() + ".report.txt"); }
    fs::path report_png() const { return dir("eval") / (fold_tag() + ".froc.png"); }
    fs::path report_key() const { return dir("eval") / (fold_tag() + ".report.key"); }
};

// ---- artifact loaders -----------------------------------------------------

inline ct_volume load_norm_volume(const paths& pp, const std::string& s) {
    const fs::path p = pp.norm(s);
    if (!fs::exists(p))
        throw dependency_error("missing " + p.string() + "; run stage 'segment' first");
    ct_volume v;
    v.series_id = s;
    v.voxels = io::load_array<float>(p.string(), &v.spacing, &v.origin);
    return v;
}

inline mip_stack load_stack(const paths& pp, const std::string& s, int t) {
    const fs::path p = pp.mip_arr(s, t);
    if (!fs::exists(p)) throw dependency_error("missing " + p.string() + "; run stage 'mip' first");
    mip_stack st;
    st.series_id = s;
    st.slab_thickness_mm = t;
    const array3d<float> a = io::load_array<float>(p.string(), &st.spacing, &st.origin);
    st.images.reserve(size_t(a.nz()));
    for (int k = 0; k < a.nz(); ++k) {
        st.images.push_back(a.slice_copy(k));
        st.z_centers.push_back(st.origin.z + k * st.spacing.z);
    }
    return st;
}

inline std::vector<array2d<float>> load_maps(const fs::path& p, mip_stack& meta) {
    if (!fs::exists(p))
        throw dependency_error("missing " + p.string() + "; run stage 'detect' first");
    const array3d<float> a = io::load_array<float>(p.string(), &meta.spacing, &meta.origin);
    std::vector<array2d<float>> maps;
    maps.reserve(size_t(a.nz()));
    for (int k = 0; k < a.nz(); ++k) maps.push_back(a.slice_copy(k));
    return maps;
}

inline std::vector<nodule_annotation> load_annotations(const pipeline_config& cfg) {
    if (!fs::exists(cfg.annotations))
        throw dependency_error("missing annotations file " + cfg.annotations.string());
    return read_annotations_csv(cfg.annotations.string());
}

inline std::vector<nodule_annotation> filter_series(const std::vector<nodule_annotation>& anns,
                                                    const std::vector<std::string>& scans) {
    const std::set<std::string> keep(scans.begin(), scans.end());
    std::vector<nodule_annotation> out;
    for (const auto& a : anns)
        if (keep.count(a.series_id)) out.push_back(a);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stage bodies. Each stage checks its content-hash key and re-runs only when
// inputs changed; missing upstream artifacts raise dependency_error naming
// the stage to run first.

inline void run_segment(const pipeline_config& cfg, std::ostream* log = nullptr) {
    detail::paths pp{cfg};
    for (const auto& s : cfg.scans) {
        const auto mhd = pp.mhd(s);
        if (!std::filesystem::exists(mhd))
            throw dependency_error("missing input volume " + mhd.string());
        std::filesystem::path raw = mhd;
        raw.replace_extension(".raw");
        fnv1a key;
        key.update("segment-v1|");
        key.update(hash_file(mhd.string()));
        if (std::filesystem::exists(raw)) key.update(hash_file(raw.string()));
        const std::string k = key.hex();
        if (detail::cache_fresh(pp.seg_key(s), k, {pp.norm(s), pp.mask(s)})) {
            detail::log_line(log, "[segment] " + s + " (cached)");
            continue;
        }
        ct_volume v = load_volume(mhd.string());
        v = normalize_hu(resample_z(v));
        const lung_mask m = segment_lungs(v);
        const ct_volume norm = apply_mask(v, m);
        io::save_array(pp.norm(s).string(), norm.voxels, norm.spacing, norm.origin);
        io::save_array(pp.mask(s).string(), m.mask, norm.spacing, norm.origin);
        detail::write_key(pp.seg_key(s), k);
        detail::log_line(log, "[segment] " + s);
    }
}

inline void run_mip(const pipeline_config& cfg, std::ostream* log = nullptr) {
    detail::paths pp{cfg};
    for (const auto& s : cfg.scans) {
        const std::string norm_hash = detail::require_artifact(pp.norm(s), "segment");
        for (int t : cfg.thicknesses) {
            fnv1a key;
            key.update("mip-v1|");
            key.update(norm_hash);
            key.update_value(t);
            const std::string k = key.hex();
            if (detail::cache_fresh(pp.mip_key(s, t), k, {pp.mip_arr(s, t)})) {
                detail::log_line(log, "[mip] " + s + " t=" + std::to_string(t) + " (cached)");
                continue;
            }
            const ct_volume v = detail::load_norm_volume(pp, s);
            const mip_stack st = build_mip_stack(v, t);
            array3d<float> stacked(st.images[0].nx(), st.images[0].ny(), int(st.images.size()));
            for (int z = 0; z < stacked.nz(); ++z)
                std::copy(st.images[size_t(z)].data(),
                          st.images[size_t(z)].data() + st.images[size_t(z)].size(),
                          &stacked(0, 0, z));
            io::save_array(pp.mip_arr(s, t).string(), stacked, st.spacing, st.origin);
            detail::write_key(pp.mip_key(s, t), k);
            detail::log_line(log, "[mip] " + s + " t=" + std::to_string(t));
        }
    }
}

inline void run_train_detect(const pipeline_config& cfg, std::ostream* log = nullptr) {
    detail::paths pp{cfg};
    const fold_plan plan = cfg.plan();
    const auto anns = detail::load_annotations(cfg);
    for (int t : cfg.thicknesses) {
        fnv1a key;
        key.update("train-detect-v1|");
        key.update(config_digest(cfg));
        key.update_value(t);
        for (const auto& s : plan.train) key.update(detail::require_artifact(pp.mip_arr(s, t), "mip"));
        for (const auto& s : plan.val) key.update(detail::require_artifact(pp.mip_arr(s, t), "mip"));
        key.update(hash_file(cfg.annotations.string()));
        const std::string k = key.hex();
        if (detail::cache_fresh(pp.detect_key(t), k, {pp.detect_model(t), pp.detect_log(t)})) {
            detail::log_line(log, "[train-detect] t=" + std::to_string(t) + " (cached)");
            continue;
        }
        detect_dataset train, val;
        for (const auto& s : plan.train) {
            const mip_stack st = detail::load_stack(pp, s, t);
            train.add_stack(st, rasterize_labels(anns, st));
        }
        for (const auto& s : plan.val) {
            const mip_stack st = detail::load_stack(pp, s, t);
            val.add_stack(st, rasterize_labels(anns, st));
        }
        detect_train_result r = train_detector(train, val, cfg.detect);
        nn::save_unet(pp.detect_model(t), r.net, t);
        write_training_log(pp.detect_log(t), r.log);
        detail::write_key(pp.detect_key(t), k);
        detail::log_line(log, "[train-detect] t=" + std::to_string(t) + " stopped at epoch " +
                                  std::to_string(r.stopped_epoch) + " (best " +
                                  std::to_string(r.best_epoch) + ")");
    }
}

inline void run_detect(const pipeline_config& cfg, std::ostream* log = nullptr) {
    detail::paths pp{cfg};
    for (int t : cfg.thicknesses) {
        const std::string model_hash =
            detail::require_artifact(pp.detect_model(t), "train-detect");
        nn::loaded_unet model = nn::load_unet(pp.detect_model(t));
        for (const auto& s : cfg.scans) {
            fnv1a key;
            key.update("detect-v1|");
            key.update(model_hash);
            key.update(detail::require_artifact(pp.mip_arr(s, t), "mip"));
            const std::string k = key.hex();
            if (detail::cache_fresh(pp.prob_key(s, t), k, {pp.prob(s, t)})) {
                detail::log_line(log, "[detect] " + s + " t=" + std::to_string(t) + " (cached)");
                continue;
            }
            const mip_stack st = detail::load_stack(pp, s, t);
            const auto maps = predict_maps(model.net, model.slab_thickness_mm, st);
            array3d<float> stacked(maps[0].nx(), maps[0].ny(), int(maps.size()));
            for (int z = 0; z < stacked.nz(); ++z)
                std::copy(maps[size_t(z)].data(), maps[size_t(z)].data() + maps[size_t(z)].size(),
                          &stacked(0, 0, z));
            io::save_array(pp.prob(s, t).string(), stacked, st.spacing, st.origin);
            detail::write_key(pp.prob_key(s, t), k);
            detail::log_line(log, "[detect] " + s + " t=" + std::to_string(t));
        }
    }
}

inline void run_merge(const pipeline_config& cfg, std::ostream* log = nullptr) {
    detail::paths pp{cfg};
    for (const auto& s : cfg.scans) {
        fnv1a key;
        key.update("merge-v1|");
        key.update_value(cfg.merge_threshold);
        for (int t : cfg.thicknesses)
            key.update(detail::require_artifact(pp.prob(s, t), "detect"));
        const std::string k = key.hex();
        std::vector<std::filesystem::path> artifacts{pp.fused_cands(s)};
        for (int t : cfg.thicknesses) artifacts.push_back(pp.stream_cands(s, t));
        if (detail::cache_fresh(pp.merge_key(s), k, artifacts)) {
            detail::log_line(log, "[merge] " + s + " (cached)");
            continue;
        }
        std::vector<std::vector<candidate>> streams;
        for (int t : cfg.thicknesses) {
            mip_stack meta;
            meta.series_id = s;
            meta.slab_thickness_mm = t;
            const auto maps = detail::load_maps(pp.prob(s, t), meta);
            auto cands = extract_candidates(meta, maps, cfg.merge_threshold);
            cands = dedup_all_slices(cands);
            cands = link_across_slices(cands);
            write_candidates_csv(pp.stream_cands(s, t), cands);
            streams.push_back(std::move(cands));
        }
        const auto fused = fuse_streams(streams);
        write_candidates_csv(pp.fused_cands(s), fused);
        detail::write_key(pp.merge_key(s), k);
        detail::log_line(log, "[merge] " + s + " -> " + std::to_string(fused.size()) +
                                  " candidates");
    }
}

inline void run_train_fpr(const pipeline_config& cfg, std::ostream* log = nullptr) {
    detail::paths pp{cfg};
    const fold_plan plan = cfg.plan();
    const auto anns = detail::load_annotations(cfg);

    fnv1a key;
    key.update("train-fpr-v1|");
    key.update(config_digest(cfg));
    for (const auto& s : plan.train) {
        key.update(detail::require_artifact(pp.fused_cands(s), "merge"));
        key.update(detail::require_artifact(pp.norm(s), "segment"));
    }
    for (const auto& s : plan.val) {
        key.update(detail::require_artifact(pp.fused_cands(s), "merge"));
        key.update(detail::require_artifact(pp.norm(s), "segment"));
    }
    key.update(hash_file(cfg.annotations.string()));
    const std::string k = key.hex();
    if (detail::cache_fresh(pp.fpr_key(), k,
                            {pp.fpr_model(16), pp.fpr_model(32), pp.fpr_log(16), pp.fpr_log(32)})) {
        detail::log_line(log, "[train-fpr] (cached)");
        return;
    }

    const auto gather = [&](const std::vector<std::string>& scans,
                            std::vector<array3d<float>>& p16, std::vector<array3d<float>>& p32,
                            std::vector<int>& labels) {
        for (const auto& s : scans) {
            const ct_volume v = detail::load_norm_volume(pp, s);
            auto cands = read_candidates_csv(pp.fused_cands(s));
            for (auto& c : cands) localize_candidate(c, v);
            const auto lab = label_candidates(cands, anns);
            for (size_t i = 0; i < cands.size(); ++i) {
                p16.push_back(extract_patch(v, cands[i], 16));
                p32.push_back(extract_patch(v, cands[i], 32));
                labels.push_back(lab[i]);
            }
        }
    };
    std::vector<array3d<float>> tr16, tr32, va16, va32;
    std::vector<int> tr_lab, va_lab;
    gather(plan.train, tr16, tr32, tr_lab);
    gather(plan.val, va16, va32, va_lab);

    fpr_train_result r16 =
        train_fpr(tr16, tr_lab, nn::cube_net_spec::for_side(16), cfg.fpr, va16, va_lab);
    nn::save_cubenet(pp.fpr_model(16), r16.net, cfg.fpr.width_divisor, cfg.fpr.dense_width);
    write_training_log(pp.fpr_log(16), r16.log);
    detail::log_line(log, "[train-fpr] 16-cube stopped at epoch " +
                              std::to_string(r16.stopped_epoch));

    fpr_train_result r32 =
        train_fpr(tr32, tr_lab, nn::cube_net_spec::for_side(32), cfg.fpr, va32, va_lab);
    nn::save_cubenet(pp.fpr_model(32), r32.net, cfg.fpr.width_divisor, cfg.fpr.dense_width);
    write_training_log(pp.fpr_log(32), r32.log);
    detail::log_line(log, "[train-fpr] 32-cube stopped at epoch " +
                              std::to_string(r32.stopped_epoch));
    detail::write_key(pp.fpr_key(), k);
}

inline void run_score(const pipeline_config& cfg, std::ostream* log = nullptr) {
    detail::paths pp{cfg};
    const fold_plan plan = cfg.plan();
    const std::string h16 = detail::require_artifact(pp.fpr_model(16), "train-fpr");
    const std::string h32 = detail::require_artifact(pp.fpr_model(32), "train-fpr");
    nn::cube_net3d net16 = nn::load_cubenet(pp.fpr_model(16));
    nn::cube_net3d net32 = nn::load_cubenet(pp.fpr_model(32));
    for (const auto& s : plan.test) {
        fnv1a key;
        key.update("score-v1|");
        key.update(h16);
        key.update(h32);
        key.update(detail::require_artifact(pp.fused_cands(s), "merge"));
        key.update(detail::require_artifact(pp.norm(s), "segment"));
        const std::string k = key.hex();
        if (detail::cache_fresh(pp.score_key(s), k, {pp.scored(s)})) {
            detail::log_line(log, "[score] " + s + " (cached)");
            continue;
        }
        const ct_volume v = detail::load_norm_volume(pp, s);
        auto cands = read_candidates_csv(pp.fused_cands(s));
        for (auto& c : cands) localize_candidate(c, v);
        score_candidates(v, cands, net16, net32, cfg.fpr.batch_size);
        write_candidates_csv(pp.scored(s), cands);
        detail::write_key(pp.score_key(s), k);
        detail::log_line(log, "[score] " + s);
    }
}

inline void run_froc(const pipeline_config& cfg, std::ostream* log = nullptr) {
    detail::paths pp{cfg};
    const fold_plan plan = cfg.plan();
    fnv1a key;
    key.update("froc-v1|");
    for (const auto& s : plan.test) key.update(detail::require_artifact(pp.scored(s), "score"));
    key.update(hash_file(cfg.annotations.string()));
    const std::string k = key.hex();
    if (detail::cache_fresh(pp.froc_key(), k, {pp.froc_csv(), pp.froc_json()})) {
        detail::log_line(log, "[froc] (cached)");
        return;
    }
    std::vector<candidate> cands;
    for (const auto& s : plan.test) {
        auto sc = read_candidates_csv(pp.scored(s));
        cands.insert(cands.end(), sc.begin(), sc.end());
    }
    const auto anns = detail::filter_series(detail::load_annotations(cfg), plan.test);
    const froc_result r = froc(cands, anns, int(plan.test.size()));
    write_froc_csv(pp.froc_csv(), r);
    nlohmann::json j;
    j["scan_count"] = r.scan_count;
    j["nodule_count"] = r.nodule_count;
    j["cpm"] = r.cpm;
    j["operating_points"] = froc_operating_points;
    j["op_sensitivity"] = r.op_sensitivity;
    std::ofstream os(pp.froc_json());
    os << j.dump(2) << '\n';
    detail::write_key(pp.froc_key(), k);
    detail::log_line(log, "[froc] cpm=" + std::to_string(r.cpm));
}

inline void run_report(const pipeline_config& cfg, std::ostream* log = nullptr) {
    detail::paths pp{cfg};
    const fold_plan plan = cfg.plan();
    fnv1a key;
    key.update("report-v1|");
    key.update(detail::require_artifact(pp.froc_json(), "froc"));
    for (const auto& s : plan.test) {
        key.update(detail::require_artifact(pp.fused_cands(s), "merge"));
        for (int t : cfg.thicknesses)
            key.update(detail::require_artifact(pp.stream_cands(s, t), "merge"));
    }
    key.update(hash_file(cfg.annotations.string()));
    const std::string k = key.hex();
    if (detail::cache_fresh(pp.report_key(), k, {pp.report_txt(), pp.report_png()})) {
        detail::log_line(log, "[report] (cached)");
        return;
    }

    const auto anns = detail::filter_series(detail::load_annotations(cfg), plan.test);
    report_input in;
    for (int t : cfg.thicknesses) {
        std::vector<candidate> cands;
        for (const auto& s : plan.test) {
            auto c = read_candidates_csv(pp.stream_cands(s, t));
            cands.insert(cands.end(), c.begin(), c.end());
        }
        in.stage1_rows.emplace_back(std::to_string(t) + " mm",
                                    stage1_metrics(cands, anns, int(plan.test.size())));
    }
    {
        std::vector<candidate> cands;
        for (const auto& s : plan.test) {
            auto c = read_candidates_csv(pp.fused_cands(s));
            cands.insert(cands.end(), c.begin(), c.end());
        }
        in.stage1_rows.emplace_back("fused", stage1_metrics(cands, anns, int(plan.test.size())));
    }
    {
        std::ifstream is(pp.froc_json());
        const nlohmann::json j = nlohmann::json::parse(is);
        in.froc.scan_count = j.at("scan_count").get<int>();
        in.froc.nodule_count = j.at("nodule_count").get<int>();
        in.froc.cpm = j.at("cpm").get<double>();
        const auto ops = j.at("op_sensitivity").get<std::vector<double>>();
        for (size_t i = 0; i < ops.size() && i < in.froc.op_sensitivity.size(); ++i)
            in.froc.op_sensitivity[i] = ops[i];
        in.has_froc = true;
    }
    // Re-derive the point cloud for the curve image.
    {
        std::vector<candidate> cands;
        for (const auto& s : plan.test) {
            auto c = read_candidates_csv(pp.scored(s));
            cands.insert(cands.end(), c.begin(), c.end());
        }
        in.froc.points = froc(cands, anns, int(plan.test.size())).points;
    }
    in.config_hash = config_digest(cfg);
    in.seed = cfg.seed;
    write_report(pp.report_txt(), in);
    render_froc_png(pp.report_png(), in.froc);
    detail::write_key(pp.report_key(), k);
    detail::log_line(log, "[report] " + pp.report_txt().string());
}

inline void run_stage(const pipeline_config& cfg, stage s, std::ostream* log = nullptr) {
    switch (s) {
        case stage::segment: run_segment(cfg, log); break;
        case stage::mip: run_mip(cfg, log); break;
        case stage::train_detect: run_train_detect(cfg, log); break;
        case stage::detect: run_detect(cfg, log); break;
        case stage::merge: run_merge(cfg, log); break;
        case stage::train_fpr: run_train_fpr(cfg, log); break;
        case stage::score: run_score(cfg, log); break;
        case stage::froc_eval: run_froc(cfg, log); break;
        case stage::report: run_report(cfg, log); break;
    }
}

inline void run_all(const pipeline_config& cfg, std::ostream* log = nullptr) {
    for (stage s : {stage::segment, stage::mip, stage::train_detect, stage::detect, stage::merge,
                    stage::train_fpr, stage::score, stage::froc_eval, stage::report})
        run_stage(cfg, s, log);
}

}  // namespace mipcad
