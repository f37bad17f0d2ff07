#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"
#include "mipcad/ct/annotations.hpp"
#include "mipcad/ct/volume.hpp"
#include "mipcad/mip/mip.hpp"

namespace mipcad {

// A detected location. Voxel centers stay fractional for geometry; the
// rounded center is what patch extraction uses. Probability is a 1.0
// placeholder until the false-positive-reduction stage scores it.
struct candidate {
    std::string series_id;
    vec3d center{0, 0, 0};  // fractional voxel coordinates
    vec3i center_voxel{0, 0, 0};
    vec3d world{0, 0, 0};  // mm
    double bbox_side = 0;  // pixels
    double bbox_mm = 0;
    std::vector<int> source_thicknesses;
    double probability = 1.0;
};

namespace detail {

inline vec3i round_voxel(const vec3d& c) {
    return {int(std::llround(c.x)), int(std::llround(c.y)), int(std::llround(c.z))};
}

inline std::vector<int> merge_sources(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out = a;
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline double xy_distance(const candidate& a, const candidate& b) {
    return std::hypot(a.center.x - b.center.x, a.center.y - b.center.y);
}

// The distance-ratio rule: centers closer than 1.1x the larger box side.
inline bool same_finding_xy(const candidate& a, const candidate& b, double max_ratio) {
    const double side = std::max(a.bbox_side, b.bbox_side);
    if (side <= 0) return false;
    return xy_distance(a, b) / side <= max_ratio;
}

inline bool center_before(const candidate& a, const candidate& b) {
    if (a.center.z != b.center.z) return a.center.z < b.center.z;
    if (a.center.x != b.center.x) return a.center.x < b.center.x;
    return a.center.y < b.center.y;
}

struct union_find {
    std::vector<int> parent;
    explicit union_find(int n) : parent(size_t(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int i) {
        while (parent[size_t(i)] != i) i = parent[size_t(i)] = parent[size_t(parent[size_t(i)])];
        return i;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[size_t(std::max(a, b))] = std::min(a, b);
    }
};

inline double median_lower(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

// Group representative: per-axis median center (lower middle for even
// groups), the largest box, and the union of source thicknesses.
inline candidate group_medoid(const std::vector<const candidate*>& group) {
    std::vector<double> xs, ys, zs, wx, wy, wz;
    candidate out;
    out.series_id = group.front()->series_id;
    out.probability = 0.0;
    for (const candidate* c : group) {
        xs.push_back(c->center.x);
        ys.push_back(c->center.y);
        zs.push_back(c->center.z);
        wx.push_back(c->world.x);
        wy.push_back(c->world.y);
        wz.push_back(c->world.z);
        out.bbox_side = std::max(out.bbox_side, c->bbox_side);
        out.bbox_mm = std::max(out.bbox_mm, c->bbox_mm);
        out.probability = std::max(out.probability, c->probability);
        out.source_thicknesses = merge_sources(out.source_thicknesses, c->source_thicknesses);
    }
    out.center = {median_lower(xs), median_lower(ys), median_lower(zs)};
    out.world = {median_lower(wx), median_lower(wy), median_lower(wz)};
    out.center_voxel = round_voxel(out.center);
    return out;
}

}  // namespace detail

inline constexpr double merge_distance_ratio = 1.1;

// Connected foreground regions of thresholded probability maps, one
// candidate per region at the bounding-box center. Regions whose box is
// elongated (aspect > 4) or tiny (area < 4 px) are discarded as irregular.
inline std::vector<candidate> extract_candidates(const mip_stack& stack,
                                                 const std::vector<array2d<float>>& maps,
                                                 double threshold = 0.5) {
    std::vector<candidate> out;
    const int nz = int(maps.size());
    for (int k = 0; k < nz; ++k) {
        const auto& m = maps[size_t(k)];
        const int nx = m.nx(), ny = m.ny();
        std::vector<int> label(size_t(nx) * ny, -1);
        std::vector<int64_t> stack_px;
        int next = 0;
        for (int sy = 0; sy < ny; ++sy)
            for (int sx = 0; sx < nx; ++sx) {
                const int64_t si = int64_t(sy) * nx + sx;
                if (m(sx, sy) < threshold || label[size_t(si)] >= 0) continue;
                // 8-connected flood fill tracking the bounding box.
                int x_lo = sx, x_hi = sx, y_lo = sy, y_hi = sy;
                label[size_t(si)] = next;
                stack_px.assign(1, si);
                while (!stack_px.empty()) {
                    const int64_t p = stack_px.back();
                    stack_px.pop_back();
                    const int px = int(p % nx), py = int(p / nx);
                    x_lo = std::min(x_lo, px);
                    x_hi = std::max(x_hi, px);
                    y_lo = std::min(y_lo, py);
                    y_hi = std::max(y_hi, py);
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int qx = px + dx, qy = py + dy;
                            if (qx < 0 || qx >= nx || qy < 0 || qy >= ny) continue;
                            const int64_t q = int64_t(qy) * nx + qx;
                            if (m(qx, qy) >= threshold && label[size_t(q)] < 0) {
                                label[size_t(q)] = next;
                                stack_px.push_back(q);
                            }
                        }
                }
                ++next;
                const int w = x_hi - x_lo + 1, h = y_hi - y_lo + 1;
                const double aspect = double(std::max(w, h)) / double(std::min(w, h));
                if (aspect > 4.0 || w * h < 4) continue;
                candidate c;
                c.series_id = stack.series_id;
                c.center = {(x_lo + x_hi) / 2.0, (y_lo + y_hi) / 2.0, double(k)};
                c.center_voxel = detail::round_voxel(c.center);
                c.world = {stack.origin.x + c.center.x * stack.spacing.x,
                           stack.origin.y + c.center.y * stack.spacing.y,
                           stack.origin.z + c.center.z * stack.spacing.z};
                c.bbox_side = std::max(w, h);
                c.bbox_mm = c.bbox_side * stack.spacing.x;
                c.source_thicknesses = {stack.slab_thickness_mm};
                out.push_back(std::move(c));
            }
    }
    return out;
}

// Same-slice deduplication. Greedy from the largest box: a candidate within
// ratio <= 1.1 of an already-kept candidate is absorbed into it (sources
// merged). Equal sizes keep the smaller (z,x,y) center. Idempotent.
inline std::vector<candidate> dedup_distance_ratio(std::vector<candidate> cands,
                                                   double max_ratio = merge_distance_ratio) {
    std::stable_sort(cands.begin(), cands.end(), [](const candidate& a, const candidate& b) {
        if (a.bbox_side != b.bbox_side) return a.bbox_side > b.bbox_side;
        return detail::center_before(a, b);
    });
    std::vector<candidate> kept;
    for (auto& c : cands) {
        bool absorbed = false;
        for (auto& k : kept)
            if (detail::same_finding_xy(k, c, max_ratio)) {
                k.source_thicknesses = detail::merge_sources(k.source_thicknesses,
                                                             c.source_thicknesses);
                absorbed = true;
                break;
            }
        if (!absorbed) kept.push_back(std::move(c));
    }
    std::sort(kept.begin(), kept.end(), detail::center_before);
    return kept;
}

// Per-slice deduplication of a whole stream: candidates are grouped by their
// integer slice index and deduplicated within each slice only.
inline std::vector<candidate> dedup_all_slices(const std::vector<candidate>& cands,
                                               double max_ratio = merge_distance_ratio) {
    std::map<long long, std::vector<candidate>> by_slice;
    for (const auto& c : cands) by_slice[std::llround(c.center.z)].push_back(c);
    std::vector<candidate> out;
    for (auto& [z, group] : by_slice) {
        auto kept = dedup_distance_ratio(std::move(group), max_ratio);
        out.insert(out.end(), kept.begin(), kept.end());
    }
    std::sort(out.begin(), out.end(), detail::center_before);
    return out;
}

// Links detections of one finding across neighboring slices: candidates are
// grouped when their (x,y) centers satisfy the distance-ratio rule and their
// z indices differ by at most the source slab thickness; each group becomes
// its medoid.
inline std::vector<candidate> link_across_slices(const std::vector<candidate>& cands,
                                                 double max_ratio = merge_distance_ratio) {
    const int n = int(cands.size());
    detail::union_find uf(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            int tol = 0;
            for (int t : cands[size_t(i)].source_thicknesses) tol = std::max(tol, t);
            for (int t : cands[size_t(j)].source_thicknesses) tol = std::max(tol, t);
            if (std::abs(cands[size_t(i)].center.z - cands[size_t(j)].center.z) > tol) continue;
            if (detail::same_finding_xy(cands[size_t(i)], cands[size_t(j)], max_ratio))
                uf.unite(i, j);
        }
    std::vector<std::vector<const candidate*>> groups;
    groups.resize(size_t(n));
    for (int i = 0; i < n; ++i) groups[size_t(uf.find(i))].push_back(&cands[size_t(i)]);
    std::vector<candidate> out;
    for (auto& g : groups)
        if (!g.empty()) out.push_back(detail::group_medoid(g));
    std::sort(out.begin(), out.end(), detail::center_before);
    return out;
}

// Fuses the per-stream candidate lists: union, then the same grouping rule
// with z tolerance = the largest slab thickness among a pair's sources.
// Output is deterministic and independent of stream order.
inline std::vector<candidate> fuse_streams(const std::vector<std::vector<candidate>>& streams,
                                           double max_ratio = merge_distance_ratio) {
    std::vector<candidate> all;
    for (const auto& s : streams) all.insert(all.end(), s.begin(), s.end());
    std::sort(all.begin(), all.end(), detail::center_before);
    return link_across_slices(all, max_ratio);
}

// --------------------------------------------------------------------------
// Candidate CSV: superset of the LUNA16 candidate format.
inline void write_candidates_csv(const std::filesystem::path& path,
                                 const std::vector<candidate>& cands) {
    std::ofstream os(path);
    if (!os) throw format_error("cannot write " + path.string());
    os << "seriesuid,coordX,coordY,coordZ,bbox_mm,probability\n";
    char line[256];
    for (const auto& c : cands) {
        std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.6f,%.9f", c.series_id.c_str(),
                      c.world.x, c.world.y, c.world.z, c.bbox_mm, c.probability);
        os << line << '\n';
    }
}

inline std::vector<candidate> read_candidates_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw format_error("cannot read " + path.string());
    std::string header;
    if (!std::getline(is, header)) throw format_error("empty candidate file " + path.string());
    const auto cols = detail::split_csv_line(header);
    const int i_series = detail::find_column(cols, "seriesuid");
    const int i_x = detail::find_column(cols, "coordX");
    const int i_y = detail::find_column(cols, "coordY");
    const int i_z = detail::find_column(cols, "coordZ");
    if (i_series < 0 || i_x < 0 || i_y < 0 || i_z < 0)
        throw format_error(path.string() + ": missing required candidate column");
    const int i_bbox = detail::find_column(cols, "bbox_mm");
    const int i_prob = detail::find_column(cols, "probability");
    std::vector<candidate> out;
    std::string line;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        const int needed = std::max({i_series, i_x, i_y, i_z, i_bbox, i_prob});
        if (int(f.size()) <= needed)
            throw format_error(path.string() + ":" + std::to_string(line_no) +
                               ": too few columns");
        candidate c;
        c.series_id = f[size_t(i_series)];
        try {
            c.world = vec3d{std::stod(f[size_t(i_x)]), std::stod(f[size_t(i_y)]),
                            std::stod(f[size_t(i_z)])};
            c.bbox_mm = i_bbox >= 0 ? std::stod(f[size_t(i_bbox)]) : 0.0;
            c.probability = i_prob >= 0 ? std::stod(f[size_t(i_prob)]) : 1.0;
        } catch (const std::exception&) {
            throw format_error(path.string() + ":" + std::to_string(line_no) +
                               ": non-numeric field");
        }
        out.push_back(std::move(c));
    }
    return out;
}

// Recomputes voxel-space fields of a CSV-loaded candidate against a volume.
inline void localize_candidate(candidate& c, const ct_volume& v) {
    c.center = world_to_voxel(v, c.world);
    c.center_voxel = detail::round_voxel(c.center);
    if (c.bbox_mm > 0 && v.spacing.x > 0) c.bbox_side = c.bbox_mm / v.spacing.x;
}

}  // namespace mipcad
