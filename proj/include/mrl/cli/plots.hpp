#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mrl::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> low;   // lower edge of the confidence band
  std::vector<double> high;  // upper edge
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

// Standalone SVG document: one polyline per series over a shaded band,
// axes with ticks, and a legend.
std::string render_svg(const LineChart& chart);

struct PlotOutputs {
  std::vector<std::filesystem::path> images;  // one per metric
  std::filesystem::path tidy_csv;
};

// Reads learning-curve CSVs (columns run, mode, steps and <metric>_mean /
// <metric>_ci pairs), overlays every run per metric and writes
// <metric>.svg plus learning_curves.csv in long format to `out_dir`.
// Rows without episodes are skipped. Throws MalformedCsv.
PlotOutputs emit_plots(const std::vector<std::filesystem::path>& csv_paths,
                       const std::filesystem::path& out_dir);

}  // namespace mrl::cli
