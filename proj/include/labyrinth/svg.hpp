#pragma once

#include <string>
#include <vector>

namespace labyrinth::svg {

enum class Style { line, markers, line_markers };

struct Series {
    std::string name;
    std::vector<double> x, y;
    std::vector<double> yerr;  // optional symmetric error bars
    Style style = Style::line;
    std::string color;  // empty: palette
};

struct Plot {
    std::string title;
    std::string subtitle;  // provenance line
    std::string xlabel, ylabel;
    bool logx = false, logy = false;
    bool equal_aspect = false;
    int width = 760, height = 520;
    std::vector<Series> series;
};

/// Line/scatter plot. Non-finite points and non-positive values on log axes are skipped.
std::string render(const Plot& plot);

struct Marker {
    double x = 0.0, y = 0.0;
    std::string label;
};

struct Heatmap {
    std::string title;
    std::string subtitle;
    std::string colorbar_label;
    int nx = 0, ny = 0;  // values[iy * nx + ix], iy = 0 at the bottom
    std::vector<double> values;
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    std::vector<Marker> markers;
    int size = 620;
};

std::string render(const Heatmap& map);

}  // namespace labyrinth::svg
