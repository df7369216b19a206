#pragma once

// Minimal static SVG line and bar charts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace svg {

struct Series {
  std::vector<double> x, y;
  std::string color = "#1f4e9c";
};

struct Panel {
  std::string title;
  std::vector<Series> series;
  bool step = false;
};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline void bounds(const std::vector<double>& v, double& lo, double& hi) {
  for (double a : v) {
    if (!std::isfinite(a)) continue;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
}

// One panel drawn into the box (x0, y0, w, h).
inline void draw_panel(std::ostream& out, const Panel& p, double x0, double y0, double w,
                       double h) {
  double xl = INFINITY, xh = -INFINITY, yl = INFINITY, yh = -INFINITY;
  for (const auto& s : p.series) {
    bounds(s.x, xl, xh);
    bounds(s.y, yl, yh);
  }
  if (!(xh > xl)) xh = xl + 1.0;
  if (!(yh > yl)) { yh = yl + 1.0; }
  const double pad = 0.05 * (yh - yl);
  yl -= pad;
  yh += pad;
  auto px = [&](double v) { return x0 + (v - xl) / (xh - xl) * w; };
  auto py = [&](double v) { return y0 + h - (v - yl) / (yh - yl) * h; };
  out << "<rect x='" << x0 << "' y='" << y0 << "' width='" << w << "' height='" << h
      << "' fill='none' stroke='#888'/>\n";
  out << "<text x='" << x0 + 4 << "' y='" << y0 + 14 << "' font-size='12'>" << p.title << "</text>\n";
  out << "<text x='" << x0 - 4 << "' y='" << y0 + 10 << "' font-size='10' text-anchor='end'>"
      << num(yh) << "</text>\n";
  out << "<text x='" << x0 - 4 << "' y='" << y0 + h << "' font-size='10' text-anchor='end'>"
      << num(yl) << "</text>\n";
  out << "<text x='" << x0 << "' y='" << y0 + h + 12 << "' font-size='10'>" << num(xl) << "</text>\n";
  out << "<text x='" << x0 + w << "' y='" << y0 + h + 12 << "' font-size='10' text-anchor='end'>"
      << num(xh) << "</text>\n";
  for (const auto& s : p.series) {
    out << "<polyline fill='none' stroke-width='1' stroke='" << s.color << "' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      if (p.step && i > 0) out << px(s.x[i]) << ',' << py(s.y[i - 1]) << ' ';
      out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    out << "'/>\n";
  }
}

inline void stacked(std::ostream& out, const std::vector<Panel>& panels, double width = 900,
                    double panel_height = 160) {
  const double h = panels.size() * (panel_height + 30) + 20;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << h
      << "' font-family='sans-serif'>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    draw_panel(out, panels[i], 70, 10 + i * (panel_height + 30), width - 90, panel_height);
  }
  out << "</svg>\n";
}

// Bars over [edges[i], edges[i+1]); `log_x` places edges logarithmically.
inline void histogram(std::ostream& out, const std::string& title,
                      const std::vector<double>& edges,
                      const std::vector<std::vector<std::size_t>>& counts,
                      const std::vector<std::string>& colors, bool log_x) {
  const double w = 600, h = 300, x0 = 60, y0 = 30;
  std::size_t top = 1;
  for (const auto& c : counts)
    for (auto v : c) top = std::max(top, v);
  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  const double lo = tx(edges.front()), hi = tx(edges.back());
  auto px = [&](double v) { return x0 + (tx(v) - lo) / (hi - lo) * w; };
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w + 100 << "' height='" << h + 80
      << "' font-family='sans-serif'>\n";
  out << "<text x='" << x0 << "' y='20' font-size='13'>" << title << "</text>\n";
  out << "<rect x='" << x0 << "' y='" << y0 << "' width='" << w << "' height='" << h
      << "' fill='none' stroke='#888'/>\n";
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double share = 1.0 / counts.size();
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const double a = px(edges[i]), b = px(edges[i + 1]);
      const double bw = (b - a) * share;
      const double bh = h * counts[k][i] / double(top);
      out << "<rect x='" << a + k * bw << "' y='" << y0 + h - bh << "' width='" << bw
          << "' height='" << bh << "' fill='" << colors[k % colors.size()]
          << "' fill-opacity='0.7'/>\n";
    }
  }
  out << "<text x='" << x0 << "' y='" << y0 + h + 14 << "' font-size='10'>" << num(edges.front())
      << "</text>\n";
  out << "<text x='" << x0 + w << "' y='" << y0 + h + 14 << "' font-size='10' text-anchor='end'>"
      << num(edges.back()) << "</text>\n";
  out << "<text x='" << x0 - 4 << "' y='" << y0 + 10 << "' font-size='10' text-anchor='end'>"
      << top << "</text>\n";
  out << "</svg>\n";
}

}  // namespace svg
