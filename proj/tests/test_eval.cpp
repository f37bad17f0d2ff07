#include "catch_amalgamated.hpp"

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "mipcad/eval/froc.hpp"

using namespace mipcad;

namespace {

nodule_annotation ann(const std::string& series, double x, double y, double z, double d) {
    return {series, {x, y, z}, d};
}

candidate cand(const std::string& series, double x, double y, double z, double p = 1.0) {
    candidate c;
    c.series_id = series;
    c.world = {x, y, z};
    c.probability = p;
    return c;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

TEST_CASE("hit rule: inside the radius, inclusive at the boundary, same series") {
    const nodule_annotation n = ann("p1", 10, 10, 10, 6);
    CHECK(hits_nodule(cand("p1", 12, 10, 10), n));
    CHECK(hits_nodule(cand("p1", 13, 10, 10), n));  // distance == radius
    CHECK_FALSE(hits_nodule(cand("p1", 14, 10, 10), n));
    CHECK_FALSE(hits_nodule(cand("p2", 10, 10, 10), n));
    CHECK(hits_nodule(cand("p1", 10, 10, 10), n));
}

TEST_CASE("match: surplus candidates on a hit nodule are neither hits nor FPs") {
    const std::vector<nodule_annotation> anns{ann("p1", 10, 10, 10, 6)};
    const std::vector<candidate> cands{cand("p1", 10, 10, 10, 0.9), cand("p1", 11, 10, 10, 0.4),
                                       cand("p1", 12, 10, 10, 0.7)};
    const match_result m = match_candidates(cands, anns);
    REQUIRE(m.hits == 1);
    REQUIRE(m.false_positives == 0);
    REQUIRE(m.missed == 0);
    REQUIRE(m.candidate_class == std::vector<int>({0, 0, 0}));
    REQUIRE(m.nodule_best_prob[0] == 0.9);
}

TEST_CASE("match: a far candidate is a false positive, absence is a miss") {
    const std::vector<nodule_annotation> anns{ann("p1", 10, 10, 10, 6),
                                              ann("p1", 60, 60, 60, 8)};
    const std::vector<candidate> cands{cand("p1", 14, 10, 10, 0.8)};
    const match_result m = match_candidates(cands, anns);
    REQUIRE(m.hits == 0);
    REQUIRE(m.false_positives == 1);
    REQUIRE(m.missed == 2);
    REQUIRE(m.candidate_class == std::vector<int>({-1}));
}

TEST_CASE("match: no candidates at all misses every nodule") {
    const std::vector<nodule_annotation> anns{ann("p1", 10, 10, 10, 6),
                                              ann("p2", 20, 20, 20, 10)};
    const match_result m = match_candidates({}, anns);
    REQUIRE(m.hits == 0);
    REQUIRE(m.false_positives == 0);
    REQUIRE(m.missed == 2);
}

TEST_CASE("match: ambiguous candidates go to the nearest nodule") {
    // Overlapping nodules: the candidate is inside both radii but closer to b.
    const std::vector<nodule_annotation> anns{ann("p1", 10, 10, 10, 20),
                                              ann("p1", 24, 10, 10, 20)};
    const std::vector<candidate> cands{cand("p1", 18, 10, 10, 0.5)};
    const match_result m = match_candidates(cands, anns);
    REQUIRE(m.candidate_class == std::vector<int>({1}));
    REQUIRE(m.hits == 1);
    REQUIRE(m.missed == 1);
}

TEST_CASE("match: irrelevant findings suppress their candidates") {
    const std::vector<nodule_annotation> anns{ann("p1", 10, 10, 10, 6)};
    const std::vector<nodule_annotation> irrelevant{ann("p1", 50, 50, 50, 10)};
    const std::vector<candidate> cands{cand("p1", 50, 50, 50, 0.8),
                                       cand("p1", 80, 80, 80, 0.7)};
    const match_result m = match_candidates(cands, anns, irrelevant);
    REQUIRE(m.candidate_class == std::vector<int>({-2, -1}));
    REQUIRE(m.false_positives == 1);
}

TEST_CASE("match: unknown candidate series are reported and still count as FPs") {
    const std::vector<nodule_annotation> anns{ann("p1", 10, 10, 10, 6)};
    const std::vector<candidate> cands{cand("mystery", 10, 10, 10, 0.8)};
    const match_result m = match_candidates(cands, anns);
    REQUIRE(m.foreign_series == std::vector<std::string>({"mystery"}));
    REQUIRE(m.false_positives == 1);
}

TEST_CASE("stage1: small synthetic counts and size strata") {
    std::vector<nodule_annotation> anns{
        ann("s0", 10, 10, 10, 3.0),   ann("s0", 40, 40, 40, 9.999),
        ann("s1", 10, 10, 10, 10.0),  ann("s1", 40, 40, 40, 19.999),
        ann("s2", 10, 10, 10, 20.0),  ann("s2", 40, 40, 40, 25.0),
        ann("s3", 10, 10, 10, 2.9),
    };
    std::vector<candidate> cands{
        cand("s0", 10, 10, 10),  // hit d=3
        cand("s1", 10, 10, 10),  // hit d=10
        cand("s2", 10, 10, 10),  // hit d=20
        cand("s0", 80, 80, 80),  // FP
        cand("s2", 80, 80, 80),  // FP
    };
    const stage1_summary s = stage1_metrics(cands, anns, 5);
    REQUIRE(s.scan_count == 5);
    REQUIRE(s.nodule_count == 7);
    REQUIRE(s.hit_count == 3);
    REQUIRE(s.missed == 4);
    REQUIRE(s.fp_count == 2);
    REQUIRE(s.sensitivity == Catch::Approx(3.0 / 7.0).margin(1e-12));
    REQUIRE(s.fps_per_scan == Catch::Approx(0.4).margin(1e-12));
    // [3,10): the 2.9 mm nodule falls below every stratum.
    REQUIRE(s.strata[0].nodules == 2);
    REQUIRE(s.strata[0].hits == 1);
    REQUIRE(s.strata[1].nodules == 2);
    REQUIRE(s.strata[1].hits == 1);
    REQUIRE(s.strata[2].nodules == 2);
    REQUIRE(s.strata[2].hits == 1);
}

TEST_CASE("stage1: full-scale counts reproduce the published ratios") {
    // 888 scans, 1186 nodules, 1131 hit, 16985 false positives.
    const int n_scans = 888, n_nodules = 1186, n_hit = 1131, n_fp = 16985;
    std::vector<nodule_annotation> anns;
    std::vector<candidate> cands;
    for (int i = 0; i < n_nodules; ++i) {
        const std::string sid = "scan" + std::to_string(i % n_scans);
        anns.push_back(ann(sid, 10.0 + i, 10, 10, 6));
        if (i < n_hit) cands.push_back(cand(sid, 10.0 + i, 10, 10));
    }
    for (int i = 0; i < n_fp; ++i)
        cands.push_back(cand("scan" + std::to_string(i % n_scans), 500, 500, 500 + i));
    const stage1_summary s = stage1_metrics(cands, anns, n_scans);
    REQUIRE(s.hit_count == n_hit);
    REQUIRE(s.fp_count == n_fp);
    REQUIRE(fmt2(100.0 * s.sensitivity) == "95.36");
    REQUIRE(fmt2(s.fps_per_scan) == "19.13");
    REQUIRE(fmt2(12940.0 / n_scans) == "14.57");
}

TEST_CASE("stage1 and froc: degenerate inputs are parameter errors") {
    const std::vector<nodule_annotation> anns{ann("p1", 10, 10, 10, 6)};
    REQUIRE_THROWS_AS(stage1_metrics({}, {}, 5), parameter_error);
    REQUIRE_THROWS_AS(stage1_metrics({}, anns, 0), parameter_error);
    REQUIRE_THROWS_AS(froc({}, {}, 5), parameter_error);
    REQUIRE_THROWS_AS(froc({}, anns, 0), parameter_error);
    const std::vector<candidate> bad{cand("p1", 10, 10, 10, 1.5)};
    REQUIRE_THROWS_AS(froc(bad, anns, 1), contract_error);
}

TEST_CASE("froc: the two-scan worked example") {
    const std::vector<nodule_annotation> anns{ann("s1", 10, 10, 10, 6),
                                              ann("s2", 50, 50, 50, 8)};
    const std::vector<candidate> cands{
        cand("s1", 10, 10, 10, 0.9),  // hit
        cand("s1", 90, 90, 90, 0.8),  // FP
        cand("s2", 50, 50, 50, 0.4),  // hit
        cand("s2", 90, 90, 90, 0.1),  // FP
    };
    const froc_result r = froc(cands, anns, 2);
    REQUIRE(r.scan_count == 2);
    REQUIRE(r.nodule_count == 2);
    REQUIRE(r.points.size() == 4);

    REQUIRE(r.points[0].threshold == 0.9);
    REQUIRE(r.points[0].fps_per_scan == 0.0);
    REQUIRE(r.points[0].sensitivity == 0.5);

    REQUIRE(r.points[1].threshold == 0.8);
    REQUIRE(r.points[1].fps_per_scan == 0.5);
    REQUIRE(r.points[1].sensitivity == 0.5);

    REQUIRE(r.points[2].threshold == 0.4);
    REQUIRE(r.points[2].fps_per_scan == 0.5);
    REQUIRE(r.points[2].sensitivity == 1.0);

    REQUIRE(r.points[3].threshold == 0.1);
    REQUIRE(r.points[3].fps_per_scan == 1.0);
    REQUIRE(r.points[3].sensitivity == 1.0);

    // Budgets 0.125 and 0.25 only admit the zero-FP threshold.
    REQUIRE(r.op_sensitivity[0] == 0.5);
    REQUIRE(r.op_sensitivity[1] == 0.5);
    REQUIRE(r.op_sensitivity[2] == 1.0);  // 0.5 FPs/scan
    for (size_t i = 3; i < 8; ++i) REQUIRE(r.op_sensitivity[i] == 1.0);
    REQUIRE(r.cpm == Catch::Approx(6.0 / 7.0).margin(1e-12));
}

TEST_CASE("froc: no candidates gives an empty curve and zero sensitivity") {
    const std::vector<nodule_annotation> anns{ann("s1", 10, 10, 10, 6)};
    const froc_result r = froc({}, anns, 1);
    REQUIRE(r.points.empty());
    for (double s : r.op_sensitivity) REQUIRE(s == 0.0);
    REQUIRE(r.cpm == 0.0);
}

TEST_CASE("froc: curve and operating points are monotone") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<nodule_annotation> anns{
        ann("s0", 10, 10, 10, 6), ann("s1", 20, 20, 20, 8), ann("s2", 30, 30, 30, 10),
        ann("s0", 70, 70, 70, 6)};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<candidate> cands;
        const int n = 5 + int(rng() % 30);
        for (int i = 0; i < n; ++i) {
            const std::string sid = "s" + std::to_string(rng() % 3);
            cands.push_back(cand(sid, u(rng) * 100, u(rng) * 100, u(rng) * 100, u(rng)));
        }
        const froc_result r = froc(cands, anns, 3);
        for (size_t i = 1; i < r.points.size(); ++i) {
            REQUIRE(r.points[i].threshold < r.points[i - 1].threshold);
            REQUIRE(r.points[i].sensitivity >= r.points[i - 1].sensitivity);
            REQUIRE(r.points[i].fps_per_scan >= r.points[i - 1].fps_per_scan);
        }
        for (size_t i = 1; i < r.op_sensitivity.size(); ++i)
            REQUIRE(r.op_sensitivity[i] >= r.op_sensitivity[i - 1]);
        for (const auto& p : r.points) {
            REQUIRE(p.sensitivity >= 0.0);
            REQUIRE(p.sensitivity <= 1.0);
            REQUIRE(p.fps_per_scan >= 0.0);
        }
    }
}

TEST_CASE("froc: demoting a false positive never hurts any operating point") {
    std::mt19937_64 rng(62);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<nodule_annotation> anns{ann("s0", 10, 10, 10, 6),
                                              ann("s1", 20, 20, 20, 8)};
    int exercised = 0;
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<candidate> cands;
        for (int i = 0; i < 12; ++i) {
            const std::string sid = "s" + std::to_string(rng() % 2);
            cands.push_back(cand(sid, u(rng) * 60, u(rng) * 60, u(rng) * 60, u(rng)));
        }
        const match_result m = match_candidates(cands, anns);
        int fp = -1;
        for (size_t i = 0; i < cands.size(); ++i)
            if (m.candidate_class[i] == -1 && cands[i].probability > 0.1) fp = int(i);
        if (fp < 0) continue;
        ++exercised;
        const froc_result before = froc(cands, anns, 2);
        cands[size_t(fp)].probability *= 0.5;
        const froc_result after = froc(cands, anns, 2);
        for (size_t i = 0; i < 8; ++i)
            REQUIRE(after.op_sensitivity[i] >= before.op_sensitivity[i] - 1e-12);
    }
    REQUIRE(exercised >= 30);
}

TEST_CASE("froc: placeholder probability 1 collapses to a single point") {
    const std::vector<nodule_annotation> anns{ann("s1", 10, 10, 10, 6)};
    const std::vector<candidate> cands{cand("s1", 10, 10, 10), cand("s1", 80, 80, 80)};
    const froc_result r = froc(cands, anns, 1);
    REQUIRE(r.points.size() == 1);
    REQUIRE(r.points[0].threshold == 1.0);
    REQUIRE(r.points[0].sensitivity == 1.0);
    REQUIRE(r.points[0].fps_per_scan == 1.0);
}
