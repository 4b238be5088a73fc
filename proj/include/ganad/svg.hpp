#pragma once

// Minimal SVG line charts for training curves and score traces.

#include <filesystem>
#include <string>
#include <vector>

namespace ganad {

struct Polyline {
  std::string label;
  std::vector<double> values;  // plotted against index 0, 1, ...
  std::string color = "#1f77b4";
};

/// One panel, shared axes, legend in the top-right corner. Non-finite values are skipped.
std::string render_line_chart(const std::string& title, const std::vector<Polyline>& lines, int width = 640,
                              int height = 360);
void write_line_chart(const std::filesystem::path& path, const std::string& title, const std::vector<Polyline>& lines);

}  // namespace ganad
