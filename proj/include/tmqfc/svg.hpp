#pragma once

// Minimal SVG emitters: matrix heatmaps and line plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace tmqfc::svg {

struct Panel {
  std::string title;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<double>> values;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string f(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 12) {
  return "<text x=\"" + f(x) + "\" y=\"" + f(y) + "\" font-size=\"" + std::to_string(size) +
         "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

inline std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f(w, 0) + "\" height=\"" + f(h, 0) +
         "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

// White to dark blue.
inline std::string shade(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 - 225 * v));
  const int g = static_cast<int>(std::lround(255 - 180 * v));
  const int b = static_cast<int>(std::lround(255 - 75 * v));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

/// Side-by-side matrix panels, cell colour and label giving the value (0..1 scale).
inline std::string heatmap(const std::vector<Panel>& panels, double cell = 56.0) {
  using namespace detail;
  const double margin = 60.0, gap = 50.0;
  double width = margin, height = 0.0;
  for (const auto& p : panels) {
    width += cell * static_cast<double>(p.col_labels.size()) + gap;
    height = std::max(height, cell * static_cast<double>(p.row_labels.size()));
  }
  height += 2 * margin;
  std::string s = header(width, height);
  double x0 = margin;
  for (const auto& p : panels) {
    const double y0 = margin;
    s += text(x0 + cell * static_cast<double>(p.col_labels.size()) / 2.0, y0 - 30.0, p.title, "middle", 14);
    for (std::size_t j = 0; j < p.col_labels.size(); ++j)
      s += text(x0 + cell * (static_cast<double>(j) + 0.5), y0 - 8.0, p.col_labels[j]);
    for (std::size_t k = 0; k < p.row_labels.size(); ++k) {
      const double y = y0 + cell * static_cast<double>(k);
      s += text(x0 - 8.0, y + cell / 2.0 + 4.0, p.row_labels[k], "end");
      for (std::size_t j = 0; j < p.col_labels.size(); ++j) {
        const double v = k < p.values.size() && j < p.values[k].size() ? p.values[k][j] : 0.0;
        const double x = x0 + cell * static_cast<double>(j);
        s += "<rect x=\"" + f(x) + "\" y=\"" + f(y) + "\" width=\"" + f(cell) + "\" height=\"" + f(cell) +
             "\" fill=\"" + shade(v) + "\" stroke=\"#444\"/>\n";
        s += "<text x=\"" + f(x + cell / 2.0) + "\" y=\"" + f(y + cell / 2.0 + 4.0) +
             "\" font-size=\"11\" text-anchor=\"middle\" fill=\"" + (v > 0.55 ? "white" : "black") + "\">" +
             f(v, 3) + "</text>\n";
      }
    }
    x0 += cell * static_cast<double>(p.col_labels.size()) + gap;
  }
  return s + "</svg>\n";
}

inline std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector<Series>& series, double width = 640.0, double height = 400.0) {
  using namespace detail;
  static const char* colours[] = {"#1f4e9c", "#c0392b", "#27864a", "#8e44ad", "#d68910", "#555555"};
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& se : series)
    for (std::size_t i = 0; i < se.x.size() && i < se.y.size(); ++i) {
      if (!std::isfinite(se.y[i])) continue;
      xmin = std::min(xmin, se.x[i]), xmax = std::max(xmax, se.x[i]);
      ymin = std::min(ymin, se.y[i]), ymax = std::max(ymax, se.y[i]);
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad, ymax += pad;
  const double l = 70, r = 20, t = 40, b = 50, pw = width - l - r, ph = height - t - b;
  auto px = [&](double x) { return l + pw * (x - xmin) / (xmax - xmin); };
  auto py = [&](double y) { return t + ph * (1.0 - (y - ymin) / (ymax - ymin)); };
  std::string s = header(width, height);
  s += "<rect x=\"" + f(l) + "\" y=\"" + f(t) + "\" width=\"" + f(pw) + "\" height=\"" + f(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  s += text(width / 2.0, 24.0, title, "middle", 14);
  s += text(l + pw / 2.0, height - 12.0, xlabel);
  s += "<text x=\"18\" y=\"" + f(t + ph / 2.0) + "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       f(t + ph / 2.0) + ")\">" + escape(ylabel) + "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0, yv = ymin + (ymax - ymin) * i / 4.0;
    s += text(px(xv), t + ph + 16.0, f(xv, 2), "middle", 10);
    s += text(l - 6.0, py(yv) + 3.0, f(yv, 3), "end", 10);
  }
  for (std::size_t n = 0; n < series.size(); ++n) {
    const auto& se = series[n];
    const char* c = colours[n % 6];
    std::string pts;
    for (std::size_t i = 0; i < se.x.size() && i < se.y.size(); ++i)
      if (std::isfinite(se.y[i])) pts += f(px(se.x[i])) + "," + f(py(se.y[i])) + " ";
    s += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    s += "<text x=\"" + f(l + pw - 8.0) + "\" y=\"" + f(t + 16.0 + 14.0 * static_cast<double>(n)) +
         "\" font-size=\"11\" text-anchor=\"end\" fill=\"" + c + "\">" + escape(se.name) + "</text>\n";
  }
  return s + "</svg>\n";
}

}  // namespace tmqfc::svg
