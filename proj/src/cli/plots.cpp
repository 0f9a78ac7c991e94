#include "mrl/cli/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "mrl/error.hpp"
#include "mrl/harness/csv.hpp"

namespace mrl::cli {

namespace fs = std::filesystem;
using harness::CsvTable;

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;  // legend column
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

// Round step (1, 2 or 5 times a power of ten) giving about `count` ticks.
double nice_step(double span, int count) {
  const double raw = span / count;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.2;
};

Range axis_range(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::abs(lo) > 0 ? std::abs(lo) * 0.1 : 1.0;
    lo -= pad;
    hi += pad;
  }
  Range r;
  r.step = nice_step(hi - lo, 5);
  r.lo = std::floor(lo / r.step) * r.step;
  r.hi = std::ceil(hi / r.step) * r.step;
  return r;
}

}  // namespace

std::string render_svg(const LineChart& chart) {
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min({ymin, s.low[i], s.mean[i]});
      ymax = std::max({ymax, s.high[i], s.mean[i]});
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  const Range xr = axis_range(xmin, xmax);
  const Range yr = axis_range(ymin, ymax);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(chart.title) + "</text>\n";

  for (double t = xr.lo; t <= xr.hi + xr.step * 1e-6; t += xr.step) {
    svg += "<line x1=\"" + num(px(t)) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(px(t)) + "\" y2=\"" +
           num(kTop + ph) + "\" stroke=\"#e5e5e5\"/>\n";
    svg += "<text x=\"" + num(px(t)) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" +
           tick_label(t) + "</text>\n";
  }
  for (double t = yr.lo; t <= yr.hi + yr.step * 1e-6; t += yr.step) {
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" +
           num(py(t)) + "\" stroke=\"#e5e5e5\"/>\n";
    svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(t) + 4) + "\" text-anchor=\"end\">" +
           tick_label(t) + "</text>\n";
  }
  svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"#333\"/>\n";
  svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 12) + "\" text-anchor=\"middle\">" +
         escape(chart.x_label) + "</text>\n";
  svg += "<text transform=\"translate(16 " + num(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(chart.y_label) + "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const std::string color = kPalette[k % std::size(kPalette)];
    if (s.x.empty()) continue;
    std::string band;
    for (std::size_t i = 0; i < s.x.size(); ++i) band += num(px(s.x[i])) + "," + num(py(s.high[i])) + " ";
    for (std::size_t i = s.x.size(); i-- > 0;) band += num(px(s.x[i])) + "," + num(py(s.low[i])) + " ";
    band.pop_back();
    svg += "<polygon points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
    std::string line;
    for (std::size_t i = 0; i < s.x.size(); ++i) line += num(px(s.x[i])) + "," + num(py(s.mean[i])) + " ";
    line.pop_back();
    svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.8\"/>\n";

    const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
    const double lx = kLeft + pw + 14;
    svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" + num(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"3\"/>\n";
    svg += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly + 4) + "\">" + escape(s.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

PlotOutputs emit_plots(const std::vector<fs::path>& csv_paths, const fs::path& out_dir) {
  if (csv_paths.empty()) throw Error(ErrorCode::InvalidConfig, "no CSV files to plot");

  // metric -> series in input order
  std::vector<std::string> metrics;
  std::map<std::string, std::vector<Series>> by_metric;
  CsvTable tidy;
  tidy.header = {"run", "mode", "steps", "metric", "mean", "ci_low", "ci_high"};

  for (const auto& path : csv_paths) {
    const CsvTable t = harness::read_csv(path);
    if (t.rows.empty()) throw Error(ErrorCode::MalformedCsv, path.string() + ": no data rows");
    const auto c_steps = t.column("steps");
    const bool has_run = t.has_column("run");
    const bool has_mode = t.has_column("mode");
    std::vector<std::pair<std::string, std::size_t>> pairs;  // metric, mean column
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      const auto& h = t.header[c];
      if (h.size() > 5 && h.ends_with("_mean")) {
        const std::string m = h.substr(0, h.size() - 5);
        t.column(m + "_ci");
        pairs.emplace_back(m, c);
      }
    }
    if (pairs.empty()) throw Error(ErrorCode::MalformedCsv, path.string() + ": no <metric>_mean columns");

    // Runs keep their first-appearance order within the file.
    std::vector<std::string> runs;
    std::map<std::string, std::vector<std::size_t>> rows_of;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string run = has_run ? t.rows[r][t.column("run")] : path.stem().string();
      if (!rows_of.count(run)) runs.push_back(run);
      rows_of[run].push_back(r);
    }
    for (const auto& run : runs) {
      const auto& rows = rows_of[run];
      const std::string mode = has_mode ? t.rows[rows.front()][t.column("mode")] : "";
      const std::string label = mode.empty() || run.rfind(mode, 0) == 0 ? run : mode + ": " + run;
      for (const auto& [metric, c_mean] : pairs) {
        const auto c_ci = t.column(metric + "_ci");
        Series s;
        s.label = label;
        for (auto r : rows) {
          if (t.rows[r][c_mean].empty()) continue;
          const double x = t.number(r, c_steps);
          const double m = t.number(r, c_mean);
          const double ci = t.number(r, c_ci);
          s.x.push_back(x);
          s.mean.push_back(m);
          s.low.push_back(m - ci);
          s.high.push_back(m + ci);
          tidy.rows.push_back({run, mode, t.rows[r][c_steps], metric, harness::format_double(m),
                               harness::format_double(m - ci), harness::format_double(m + ci)});
        }
        if (!by_metric.count(metric)) metrics.push_back(metric);
        by_metric[metric].push_back(std::move(s));
      }
    }
  }

  fs::create_directories(out_dir);
  PlotOutputs out;
  for (const auto& metric : metrics) {
    LineChart chart{metric, "environment steps", metric + " (mean, 95% CI)", by_metric[metric]};
    const fs::path image = out_dir / (metric + ".svg");
    harness::write_file(image, render_svg(chart));
    out.images.push_back(image);
  }
  out.tidy_csv = out_dir / "learning_curves.csv";
  harness::write_csv(tidy, out.tidy_csv);
  return out;
}

}  // namespace mrl::cli
