#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace vflux {

/// Standalone scatter plot with the identity line and unit guide lines
/// (severity limit) on both axes. Output bytes are deterministic.
struct ScatterPlot {
    std::string title;
    std::string x_label = "P_st";
    std::string y_label = "P_stc";
    std::vector<std::pair<double, double>> points;
    bool identity_line = true;
    bool unit_guides = true;
};

void write_scatter_svg(const std::filesystem::path& path, const ScatterPlot& plot);

} // namespace vflux
