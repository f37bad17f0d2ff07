#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mipcad/core/array.hpp"
#include "mipcad/core/error.hpp"

namespace mipcad {

// Reference-standard nodule: world-mm center plus diameter.
struct nodule_annotation {
    std::string series_id;
    vec3d center_world;
    double diameter_mm = 0.0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream iss(line);
    while (std::getline(iss, field, ',')) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline int find_column(const std::vector<std::string>& header, const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return int(i);
    return -1;
}

}  // namespace detail

// Reads the benchmark annotation CSV. Required columns:
// seriesuid,coordX,coordY,coordZ,diameter_mm. Extra columns are ignored.
inline std::vector<nodule_annotation> read_annotations_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw format_error("cannot open annotations CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw format_error("empty annotations CSV: " + path);
    auto header = detail::split_csv_line(line);
    const int c_id = detail::find_column(header, "seriesuid");
    const int c_x = detail::find_column(header, "coordX");
    const int c_y = detail::find_column(header, "coordY");
    const int c_z = detail::find_column(header, "coordZ");
    const int c_d = detail::find_column(header, "diameter_mm");
    if (c_id < 0 || c_x < 0 || c_y < 0 || c_z < 0 || c_d < 0)
        throw format_error("annotations CSV missing required columns: " + path);

    std::vector<nodule_annotation> out;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto f = detail::split_csv_line(line);
        const int needed = std::max({c_id, c_x, c_y, c_z, c_d});
        if (int(f.size()) <= needed)
            throw format_error(path + ":" + std::to_string(line_no) + ": too few columns");
        try {
            out.push_back({f[c_id],
                           {std::stod(f[c_x]), std::stod(f[c_y]), std::stod(f[c_z])},
                           std::stod(f[c_d])});
        } catch (const std::exception&) {
            throw format_error(path + ":" + std::to_string(line_no) + ": non-numeric field");
        }
    }
    return out;
}

inline void write_annotations_csv(const std::string& path,
                                  const std::vector<nodule_annotation>& anns) {
    std::ofstream out(path);
    if (!out) throw format_error("cannot write annotations CSV: " + path);
    out << "seriesuid,coordX,coordY,coordZ,diameter_mm\n";
    for (const auto& a : anns)
        out << a.series_id << ',' << a.center_world.x << ',' << a.center_world.y << ','
            << a.center_world.z << ',' << a.diameter_mm << '\n';
}

}  // namespace mipcad
