#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flipsim {

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    int width = 860;
    int height = 520;
};

/// Self-contained SVG line chart with axes, ticks and a legend. Output is a
/// pure function of `spec`.
std::string render_svg(const PlotSpec& spec);

class PlotError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Renders every figure family found in a curves directory (as written by
/// write_curves): learning curves per attack probability, cost frontiers
/// per attack probability, and for the dynamic set one learning-curve
/// family across attack probabilities. Returns the files written.
std::vector<std::filesystem::path> render_figures(const std::filesystem::path& curves_dir,
                                                  const std::filesystem::path& out_dir);

}  // namespace flipsim
