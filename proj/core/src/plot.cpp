#include "hopgat/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hopgat/errors.hpp"

namespace hopgat {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

void header(std::ostringstream& out, const Frame& f, const ChartLabels& labels) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(labels.title)
      << "</text>\n";
  const double bx = kLeft, by = kHeight - kBottom, ex = kWidth - kRight;
  out << "<line x1=\"" << bx << "\" y1=\"" << by << "\" x2=\"" << ex << "\" y2=\"" << by << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << bx << "\" y1=\"" << by << "\" x2=\"" << bx << "\" y2=\"" << kTop << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = f.x0 + (f.x1 - f.x0) * t / 4.0, yv = f.y0 + (f.y1 - f.y0) * t / 4.0;
    out << "<text x=\"" << f.px(xv) << "\" y=\"" << by + 16 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
    out << "<text x=\"" << bx - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  out << "<text x=\"" << (bx + ex) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(labels.x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << (kTop + by) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (kTop + by) / 2 << ")\">" << escape(labels.y_label) << "</text>\n";
}

void legend(std::ostringstream& out, std::size_t k, const std::string& name) {
  const double x = kWidth - kRight + 12, y = kTop + 18.0 * static_cast<double>(k);
  out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[k % 6]
      << "\"/>\n<text x=\"" << x + 18 << "\" y=\"" << y + 10 << "\">" << escape(name) << "</text>\n";
}

}  // namespace

std::string svg_line_chart(const std::vector<Series>& series, const ChartLabels& labels) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) throw DimensionError("line chart: series '" + s.name + "' has unequal x and y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]), x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]), y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  widen(x0, x1);
  widen(y0, y1);
  const Frame f{x0, x1, y0, y1};
  std::ostringstream out;
  out.precision(4);
  header(out, f, labels);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[k % 6] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) out << f.px(s.x[i]) << ',' << f.py(s.y[i]) << ' ';
    }
    out << "\"/>\n";
    legend(out, k, s.name);
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_histogram(const std::vector<HistogramSeries>& series, double lo, double hi, const ChartLabels& labels) {
  widen(lo, hi);
  double top = 0;
  for (const auto& s : series)
    for (double c : s.counts) top = std::max(top, c);
  if (top <= 0) top = 1;
  const Frame f{lo, hi, 0.0, top};
  std::ostringstream out;
  out.precision(4);
  header(out, f, labels);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& counts = series[k].counts;
    if (counts.empty()) continue;
    const double w = (hi - lo) / static_cast<double>(counts.size());
    out << "<polyline fill=\"" << kPalette[k % 6] << "\" fill-opacity=\"0.25\" stroke=\"" << kPalette[k % 6]
        << "\" points=\"" << f.px(lo) << ',' << f.py(0) << ' ';
    for (std::size_t b = 0; b < counts.size(); ++b) {
      const double a = lo + w * static_cast<double>(b);
      out << f.px(a) << ',' << f.py(counts[b]) << ' ' << f.px(a + w) << ',' << f.py(counts[b]) << ' ';
    }
    out << f.px(hi) << ',' << f.py(0) << "\"/>\n";
    legend(out, k, series[k].name);
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace hopgat
