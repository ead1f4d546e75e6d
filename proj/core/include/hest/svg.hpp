#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hest {

/// One polyline of a chart.
struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal self-contained SVG line chart: axes, tick labels, legend. Meant
/// as a convenience view of data already written to CSV.
std::string render_line_chart(const std::vector<Series>& series, const std::string& title,
                              const std::string& x_label, const std::string& y_label,
                              int width = 880, int height = 520);

void write_svg(const std::filesystem::path& path, const std::string& svg);

} // namespace hest
