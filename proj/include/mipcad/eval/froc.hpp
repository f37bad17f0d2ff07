#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"
#include "mipcad/ct/annotations.hpp"
#include "mipcad/merge/candidates.hpp"

namespace mipcad {

// Hit rule: candidate center within the nodule's radius, same series.
inline bool hits_nodule(const candidate& c, const nodule_annotation& a) {
    if (c.series_id != a.series_id) return false;
    const vec3d d{c.world.x - a.center_world.x, c.world.y - a.center_world.y,
                  c.world.z - a.center_world.z};
    return length(d) <= a.diameter_mm / 2.0;
}

struct match_result {
    std::vector<char> nodule_hit;          // per annotation
    std::vector<double> nodule_best_prob;  // max probability among hitting candidates
    std::vector<int> candidate_class;      // per candidate: >=0 hit (annotation index),
                                           // -1 false positive, -2 suppressed
    std::vector<std::string> foreign_series;  // candidate series absent from references
    int hits = 0;
    int false_positives = 0;
    int missed = 0;
};

// Matches candidates to reference nodules. A nodule counts one hit no matter
// how many candidates land on it; hitting candidates are never false
// positives. Candidates matching the optional irrelevant-findings list are
// suppressed (neither hit nor FP). Unknown candidate series are collected for
// reporting, their candidates still count as FPs.
inline match_result match_candidates(const std::vector<candidate>& cands,
                                     const std::vector<nodule_annotation>& anns,
                                     const std::vector<nodule_annotation>& irrelevant = {}) {
    match_result r;
    r.nodule_hit.assign(anns.size(), 0);
    r.nodule_best_prob.assign(anns.size(), 0.0);
    r.candidate_class.assign(cands.size(), -1);
    std::set<std::string> known;
    for (const auto& a : anns) known.insert(a.series_id);
    std::set<std::string> foreign;

    for (size_t ci = 0; ci < cands.size(); ++ci) {
        const candidate& c = cands[ci];
        if (!known.count(c.series_id)) foreign.insert(c.series_id);
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t ai = 0; ai < anns.size(); ++ai) {
            if (!hits_nodule(c, anns[ai])) continue;
            const vec3d d{c.world.x - anns[ai].center_world.x,
                          c.world.y - anns[ai].center_world.y,
                          c.world.z - anns[ai].center_world.z};
            const double dist = length(d);
            if (dist < best_d) {
                best_d = dist;
                best = int(ai);
            }
        }
        if (best >= 0) {
            r.candidate_class[ci] = best;
            r.nodule_hit[size_t(best)] = 1;
            r.nodule_best_prob[size_t(best)] =
                std::max(r.nodule_best_prob[size_t(best)], c.probability);
            continue;
        }
        bool suppressed = false;
        for (const auto& irr : irrelevant)
            if (hits_nodule(c, irr)) {
                suppressed = true;
                break;
            }
        r.candidate_class[ci] = suppressed ? -2 : -1;
        if (!suppressed) ++r.false_positives;
    }
    for (char h : r.nodule_hit) r.hits += h ? 1 : 0;
    r.missed = int(anns.size()) - r.hits;
    r.foreign_series.assign(foreign.begin(), foreign.end());
    return r;
}

// --------------------------------------------------------------------------
struct size_stratum {
    double lo_mm = 0, hi_mm = 0;  // [lo, hi)
    int nodules = 0;
    int hits = 0;
};

struct stage1_summary {
    int scan_count = 0;
    int nodule_count = 0;
    int hit_count = 0;
    int fp_count = 0;
    int missed = 0;
    double sensitivity = 0;
    double fps_per_scan = 0;
    std::array<size_stratum, 3> strata{};  // [3,10), [10,20), [20,inf) mm
};

// Threshold-free counts for the candidate-detection stage, where every
// candidate carries placeholder probability 1.
inline stage1_summary stage1_metrics(const std::vector<candidate>& cands,
                                     const std::vector<nodule_annotation>& anns, int scan_count,
                                     const std::vector<nodule_annotation>& irrelevant = {}) {
    if (anns.empty()) throw parameter_error("stage1_metrics: zero nodules, sensitivity undefined");
    if (scan_count < 1) throw parameter_error("stage1_metrics: scan count must be >= 1");
    const match_result m = match_candidates(cands, anns, irrelevant);
    stage1_summary s;
    s.scan_count = scan_count;
    s.nodule_count = int(anns.size());
    s.hit_count = m.hits;
    s.fp_count = m.false_positives;
    s.missed = m.missed;
    s.sensitivity = double(m.hits) / double(anns.size());
    s.fps_per_scan = double(m.false_positives) / double(scan_count);
    s.strata = {size_stratum{3, 10, 0, 0}, size_stratum{10, 20, 0, 0},
                size_stratum{20, std::numeric_limits<double>::infinity(), 0, 0}};
    for (size_t ai = 0; ai < anns.size(); ++ai)
        for (auto& st : s.strata)
            if (anns[ai].diameter_mm >= st.lo_mm && anns[ai].diameter_mm < st.hi_mm) {
                ++st.nodules;
                if (m.nodule_hit[ai]) ++st.hits;
            }
    return s;
}

// --------------------------------------------------------------------------
struct froc_point {
    double threshold = 0;
    double fps_per_scan = 0;
    double sensitivity = 0;
};

inline constexpr std::array<double, 8> froc_operating_points{0.125, 0.25, 0.5, 1, 2, 4, 8, 16};

struct froc_result {
    std::vector<froc_point> points;  // descending threshold
    std::array<double, 8> op_sensitivity{};
    double cpm = 0;  // mean sensitivity over the 0.125..8 points
    int scan_count = 0;
    int nodule_count = 0;
};

// Sweeps every distinct candidate probability as a threshold. The sensitivity
// reported at an operating point is the best sensitivity among thresholds
// whose FPs/scan stay within the budget (0 when none qualifies).
inline froc_result froc(const std::vector<candidate>& cands,
                        const std::vector<nodule_annotation>& anns, int scan_count,
                        const std::vector<nodule_annotation>& irrelevant = {}) {
    if (anns.empty()) throw parameter_error("froc: zero nodules, sensitivity undefined");
    if (scan_count < 1) throw parameter_error("froc: scan count must be >= 1");
    for (const auto& c : cands)
        if (!(c.probability >= 0.0 && c.probability <= 1.0))
            throw contract_error("froc: candidate probability outside [0,1]");

    const match_result m = match_candidates(cands, anns, irrelevant);
    std::vector<double> fp_probs;
    for (size_t ci = 0; ci < cands.size(); ++ci)
        if (m.candidate_class[ci] == -1) fp_probs.push_back(cands[ci].probability);
    std::sort(fp_probs.begin(), fp_probs.end(), std::greater<double>());
    std::vector<double> hit_probs;  // per-nodule best probability
    for (size_t ai = 0; ai < anns.size(); ++ai)
        if (m.nodule_hit[ai]) hit_probs.push_back(m.nodule_best_prob[ai]);
    std::sort(hit_probs.begin(), hit_probs.end(), std::greater<double>());

    std::vector<double> thresholds;
    for (const auto& c : cands) thresholds.push_back(c.probability);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<double>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    froc_result r;
    r.scan_count = scan_count;
    r.nodule_count = int(anns.size());
    for (double th : thresholds) {
        // count of probabilities >= th in a descending-sorted list
        const auto ge = [&](const std::vector<double>& v) {
            return std::upper_bound(v.begin(), v.end(), th,
                                    [](double a, double b) { return a > b; }) -
                   v.begin();
        };
        froc_point p;
        p.threshold = th;
        p.sensitivity = double(ge(hit_probs)) / double(anns.size());
        p.fps_per_scan = double(ge(fp_probs)) / double(scan_count);
        r.points.push_back(p);
    }

    for (size_t i = 0; i < froc_operating_points.size(); ++i) {
        double best = 0;
        for (const auto& p : r.points)
            if (p.fps_per_scan <= froc_operating_points[i]) best = std::max(best, p.sensitivity);
        r.op_sensitivity[i] = best;
    }
    r.cpm = 0;
    for (size_t i = 0; i < 7; ++i) r.cpm += r.op_sensitivity[i];
    r.cpm /= 7.0;
    return r;
}

}  // namespace mipcad
