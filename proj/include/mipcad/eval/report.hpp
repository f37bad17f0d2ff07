#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mipcad/core/error.hpp"
#include "mipcad/eval/froc.hpp"
#include "mipcad/io/png.hpp"

namespace mipcad {

// Published full-scale benchmark figures (888 scans, 1186 nodules), kept in
// the report as reference targets; desk-scale runs are not expected to reach
// them.
struct reference_targets {
    static constexpr double stream_sens[4] = {82.80, 87.86, 89.97, 88.70};
    static constexpr double stream_fps_per_scan[4] = {14.57, 11.03, 7.76, 6.31};
    static constexpr double fused_sens = 95.36;
    static constexpr double fused_fps_per_scan = 19.13;
    static constexpr double froc_at_1 = 92.67;
    static constexpr double froc_at_2 = 94.19;
};

struct report_input {
    std::vector<std::pair<std::string, stage1_summary>> stage1_rows;  // streams then fused
    froc_result froc;
    bool has_froc = false;
    std::string config_hash;
    uint64_t seed = 0;
};

inline void write_froc_csv(const std::filesystem::path& path, const froc_result& r) {
    std::ofstream os(path);
    if (!os) throw format_error("cannot write " + path.string());
    os << "threshold,fps_per_scan,sensitivity\n";
    char line[128];
    for (const auto& p : r.points) {
        std::snprintf(line, sizeof(line), "%.9f,%.6f,%.6f", p.threshold, p.fps_per_scan,
                      p.sensitivity);
        os << line << '\n';
    }
}

namespace detail {

inline void put_px(std::vector<uint8_t>& rgb, int w, int h, int x, int y, uint8_t r, uint8_t g,
                   uint8_t b) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    const size_t i = (size_t(y) * w + x) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
}

inline void draw_line(std::vector<uint8_t>& rgb, int w, int h, int x0, int y0, int x1, int y1,
                      uint8_t r, uint8_t g, uint8_t b) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        put_px(rgb, w, h, x0, y0, r, g, b);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace detail

// Sensitivity vs FPs/scan on a log2 x axis from 0.125 to 16, with gridlines
// at the standard operating points.
inline void render_froc_png(const std::filesystem::path& path, const froc_result& r,
                            int width = 640, int height = 480) {
    const int ml = 50, mr = 20, mt = 20, mb = 40;  // plot margins
    std::vector<uint8_t> rgb(size_t(width) * height * 3, 255);
    const double x_lo = std::log2(0.125), x_hi = std::log2(16.0);
    const auto px = [&](double fps) {
        const double lx = std::log2(std::max(fps, 0.125));
        return ml + int(std::lround((lx - x_lo) / (x_hi - x_lo) * (width - ml - mr)));
    };
    const auto py = [&](double sens) {
        return mt + int(std::lround((1.0 - sens) * (height - mt - mb)));
    };
    for (double op : froc_operating_points)
        detail::draw_line(rgb, width, height, px(op), mt, px(op), height - mb, 220, 220, 220);
    for (int i = 0; i <= 10; ++i)
        detail::draw_line(rgb, width, height, ml, py(i / 10.0), width - mr, py(i / 10.0), 230,
                          230, 230);
    detail::draw_line(rgb, width, height, ml, mt, ml, height - mb, 0, 0, 0);
    detail::draw_line(rgb, width, height, ml, height - mb, width - mr, height - mb, 0, 0, 0);

    // FROC points sorted by FPs/scan form the polyline.
    std::vector<froc_point> pts = r.points;
    std::sort(pts.begin(), pts.end(),
              [](const froc_point& a, const froc_point& b) { return a.fps_per_scan < b.fps_per_scan; });
    for (size_t i = 1; i < pts.size(); ++i)
        detail::draw_line(rgb, width, height, px(pts[i - 1].fps_per_scan),
                          py(pts[i - 1].sensitivity), px(pts[i].fps_per_scan),
                          py(pts[i].sensitivity), 180, 30, 30);
    for (const auto& p : pts)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                detail::put_px(rgb, width, height, px(p.fps_per_scan) + dx,
                               py(p.sensitivity) + dy, 180, 30, 30);
    io::write_png_rgb(path.string(), rgb, width, height);
}

// Text summary mirroring the benchmark table layout: one stage-1 row per
// stream plus the fused row, then the FROC operating points, each next to
// the published full-scale reference values.
inline std::string format_report(const report_input& in) {
    std::ostringstream os;
    char buf[256];
    os << "nodule detection report\n";
    os << "=======================\n";
    os << "config_hash: " << in.config_hash << "\n";
    os << "seed: " << in.seed << "\n\n";

    if (!in.stage1_rows.empty()) {
        os << "candidate detection (stage 1)\n";
        os << "-----------------------------\n";
        std::snprintf(buf, sizeof(buf), "%-12s %14s %8s %8s %10s %8s %8s %8s\n", "stream",
                      "detected/total", "sens%", "FPs", "FPs/scan", "3-10mm", "10-20mm",
                      ">=20mm");
        os << buf;
        for (const auto& [label, s] : in.stage1_rows) {
            std::snprintf(buf, sizeof(buf),
                          "%-12s %7d/%-6d %8.2f %8d %10.2f %5d/%-3d %5d/%-3d %5d/%-3d\n",
                          label.c_str(), s.hit_count, s.nodule_count, 100.0 * s.sensitivity,
                          s.fp_count, s.fps_per_scan, s.strata[0].hits, s.strata[0].nodules,
                          s.strata[1].hits, s.strata[1].nodules, s.strata[2].hits,
                          s.strata[2].nodules);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf),
                      "reference (full-scale, 888 scans): streams %.2f/%.2f/%.2f/%.2f sens%%, "
                      "fused %.2f sens%% at %.2f FPs/scan\n\n",
                      reference_targets::stream_sens[0], reference_targets::stream_sens[1],
                      reference_targets::stream_sens[2], reference_targets::stream_sens[3],
                      reference_targets::fused_sens, reference_targets::fused_fps_per_scan);
        os << buf;
    }

    if (in.has_froc) {
        os << "false-positive reduction (stage 2)\n";
        os << "----------------------------------\n";
        os << "sensitivity at FPs/scan:\n";
        for (size_t i = 0; i < froc_operating_points.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "  %6.3f : %.4f\n", froc_operating_points[i],
                          in.froc.op_sensitivity[i]);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), "  CPM (mean over 0.125..8): %.4f\n", in.froc.cpm);
        os << buf;
        std::snprintf(buf, sizeof(buf),
                      "reference (full-scale): %.2f%% at 1 FP/scan, %.2f%% at 2 FPs/scan\n",
                      reference_targets::froc_at_1, reference_targets::froc_at_2);
        os << buf;
        std::snprintf(buf, sizeof(buf), "scans: %d, nodules: %d\n", in.froc.scan_count,
                      in.froc.nodule_count);
        os << buf;
    }
    return os.str();
}

inline void write_report(const std::filesystem::path& path, const report_input& in) {
    std::ofstream os(path);
    if (!os) throw format_error("cannot write " + path.string());
    os << format_report(in);
}

}  // namespace mipcad
