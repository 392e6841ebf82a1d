#pragma once

#include <string>
#include <vector>

namespace mgilc {

struct PlotSeries {
    std::string name;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title;
    std::string x_label, y_label;  // include units, e.g. "time [s]"
    std::vector<PlotSeries> series;
    int width = 800, height = 480;
};

// Self-contained SVG with linear axes and a legend. Byte-identical for identical input.
std::string render_svg(const PlotSpec& plot);
void emit_svg(const PlotSpec& plot, const std::string& path);

}  // namespace mgilc
