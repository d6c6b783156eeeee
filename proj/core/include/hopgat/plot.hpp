#pragma once

// Minimal standalone SVG charts for the analysis commands.

#include <string>
#include <vector>

namespace hopgat {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartLabels {
  std::string title;
  std::string x_label;
  std::string y_label;
};

// Polyline per series with markers, axes scaled to the data.
std::string svg_line_chart(const std::vector<Series>& series, const ChartLabels& labels);

struct HistogramSeries {
  std::string name;
  std::vector<double> counts;  // one per bin
};

// Overlaid step histograms over equal-width bins on [lo, hi).
std::string svg_histogram(const std::vector<HistogramSeries>& series, double lo, double hi,
                          const ChartLabels& labels);

}  // namespace hopgat
