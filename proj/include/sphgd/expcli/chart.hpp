// Minimal log-scale SVG line charts, written without an external renderer.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sphgd/csv.hpp"

namespace sphgd::expcli {

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y); non-positive y are skipped
};

namespace detail {
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}
}  // namespace detail

/// Chart with a linear x axis and a log10 y axis. Series are thinned to at most
/// `max_points` points each so long runs stay small.
inline std::string render_log_chart(const std::vector<ChartSeries>& series, const std::string& x_label,
                                    const std::string& title, std::size_t max_points = 1000) {
  constexpr double W = 720, H = 440, L = 70, R = 170, T = 40, B = 50;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (auto [x, y] : s.points)
      if (std::isfinite(x) && std::isfinite(y) && y > 0.0) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, std::log10(y));
        y1 = std::max(y1, std::log10(y));
      }
  const bool has_data = std::isfinite(x0);
  if (!has_data) {
    x0 = 0, x1 = 1, y0 = -1, y1 = 1;
  }
  if (x1 == x0) x1 = x0 + 1;
  y0 = std::floor(y0);
  y1 = std::ceil(y1);
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - y0) / (y1 - y0) * (H - T - B); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"720\" height=\"440\" fill=\"white\"/>\n";
  svg += "<text x=\"" + detail::num(W / 2 - R / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::escape(title) + "</text>\n";
  svg += "<line x1=\"" + detail::num(L) + "\" y1=\"" + detail::num(H - B) + "\" x2=\"" + detail::num(W - R) + "\" y2=\"" +
         detail::num(H - B) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + detail::num(L) + "\" y1=\"" + detail::num(T) + "\" x2=\"" + detail::num(L) + "\" y2=\"" +
         detail::num(H - B) + "\" stroke=\"black\"/>\n";
  const int decades = static_cast<int>(y1 - y0);
  const int step = std::max(1, decades / 8);
  for (int d = static_cast<int>(y0); d <= static_cast<int>(y1); d += step) {
    const double y = py(d);
    svg += "<line x1=\"" + detail::num(L) + "\" y1=\"" + detail::num(y) + "\" x2=\"" + detail::num(W - R) + "\" y2=\"" +
           detail::num(y) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + detail::num(L - 6) + "\" y=\"" + detail::num(y + 4) + "\" text-anchor=\"end\">1e" +
           std::to_string(d) + "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double x = x0 + (x1 - x0) * i / 4.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    svg += "<text x=\"" + detail::num(px(x)) + "\" y=\"" + detail::num(H - B + 18) + "\" text-anchor=\"middle\">" + buf +
           "</text>\n";
  }
  svg += "<text x=\"" + detail::num((L + W - R) / 2) + "\" y=\"" + detail::num(H - 10) + "\" text-anchor=\"middle\">" +
         detail::escape(x_label) + "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const std::string color = palette[i % (sizeof palette / sizeof *palette)];
    std::vector<std::pair<double, double>> pts;
    for (auto [x, y] : s.points)
      if (std::isfinite(x) && std::isfinite(y) && y > 0.0) pts.emplace_back(px(x), py(std::log10(y)));
    if (pts.size() > max_points) {
      std::vector<std::pair<double, double>> thin;
      const double stride = static_cast<double>(pts.size() - 1) / static_cast<double>(max_points - 1);
      for (std::size_t j = 0; j < max_points; ++j) thin.push_back(pts[static_cast<std::size_t>(std::lround(j * stride))]);
      pts = std::move(thin);
    }
    if (pts.size() == 1) {
      svg += "<circle cx=\"" + detail::num(pts[0].first) + "\" cy=\"" + detail::num(pts[0].second) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    } else if (pts.size() > 1) {
      svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t j = 0; j < pts.size(); ++j)
        svg += (j ? " " : "") + detail::num(pts[j].first) + "," + detail::num(pts[j].second);
      svg += "\"/>\n";
    }
    const double ly = T + 10 + 18.0 * static_cast<double>(i);
    svg += "<line x1=\"" + detail::num(W - R + 12) + "\" y1=\"" + detail::num(ly) + "\" x2=\"" + detail::num(W - R + 32) +
           "\" y2=\"" + detail::num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + detail::num(W - R + 38) + "\" y=\"" + detail::num(ly + 4) + "\">" + detail::escape(s.name) +
           "</text>\n";
  }
  if (!has_data)
    svg += "<text x=\"" + detail::num((L + W - R) / 2) + "\" y=\"" + detail::num((T + H - B) / 2) +
           "\" text-anchor=\"middle\" fill=\"#888\">no data</text>\n";
  svg += "</svg>\n";
  return svg;
}

/// Plots `y_columns` of a CSV file against `x_column`. Missing columns are errors
/// naming the column; blank cells are skipped.
inline void emit_chart(const std::string& csv_path, const std::string& x_column,
                       const std::vector<std::string>& y_columns, const std::string& svg_path,
                       const std::string& title = "") {
  const auto data = read_csv(csv_path);
  const std::size_t xi = data.column(x_column);
  std::vector<ChartSeries> series;
  for (const auto& name : y_columns) {
    const std::size_t yi = data.column(name);
    ChartSeries s{name, {}};
    for (const auto& row : data.rows) {
      if (xi >= row.size() || yi >= row.size() || row[xi].empty() || row[yi].empty()) continue;
      s.points.emplace_back(parse_double(row[xi]), parse_double(row[yi]));
    }
    series.push_back(std::move(s));
  }
  std::ofstream f(svg_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + svg_path + " for writing");
  f << render_log_chart(series, x_column, title);
}

}  // namespace sphgd::expcli
