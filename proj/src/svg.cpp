#include "tactsim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>

#include "tactsim/common.hpp"

namespace tactsim {

namespace {

void put(std::string& out, const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  out += buf;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                "#ff7f0e", "#9467bd", "#8c564b"};
constexpr int kPaletteSize = 6;

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Tick step of the form {1,2,5}*10^k giving roughly `target` divisions.
double nice_step(double range, int target) {
  double raw = range / target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double norm = raw / mag;
  double mult = norm <= 1.5 ? 1.0 : norm <= 3.5 ? 2.0 : norm <= 7.5 ? 5.0 : 10.0;
  return mult * mag;
}

}  // namespace

std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label) {
  if (series.empty()) throw InvariantError("line_chart_svg: no series");
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const auto& s : series) {
    if (s.xs.size() != s.ys.size())
      throw InvariantError("line_chart_svg: series length mismatch");
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i]))
        throw InvariantError("line_chart_svg: non-finite value");
      if (first) {
        xmin = xmax = s.xs[i];
        ymin = ymax = s.ys[i];
        first = false;
      } else {
        xmin = std::min(xmin, s.xs[i]);
        xmax = std::max(xmax, s.xs[i]);
        ymin = std::min(ymin, s.ys[i]);
        ymax = std::max(ymax, s.ys[i]);
      }
    }
  }
  if (first) throw InvariantError("line_chart_svg: no data points");
  if (xmax - xmin < 1e-300) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-300) { ymin -= 0.5; ymax += 0.5; }

  const double width = 640, height = 420;
  const double x0 = 72, x1 = 620, y0 = 36, y1 = 368;  // plot rectangle
  auto px = [&](double x) { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); };
  auto py = [&](double y) { return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0); };

  std::string svg;
  put(svg,
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
      "viewBox=\"0 0 %g %g\" font-family=\"sans-serif\" font-size=\"12\">\n",
      width, height, width, height);
  put(svg, "<rect width=\"%g\" height=\"%g\" fill=\"white\"/>\n", width, height);
  put(svg, "<text x=\"%g\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">%s</text>\n",
      (x0 + x1) / 2, escape_xml(title).c_str());

  double xs = nice_step(xmax - xmin, 6);
  for (double t = std::ceil(xmin / xs) * xs; t <= xmax + xs * 1e-9; t += xs) {
    put(svg, "<line x1=\"%.2f\" y1=\"%g\" x2=\"%.2f\" y2=\"%g\" stroke=\"#dddddd\"/>\n",
        px(t), y0, px(t), y1);
    put(svg, "<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">%.6g</text>\n",
        px(t), y1 + 18, t);
  }
  double ys = nice_step(ymax - ymin, 5);
  for (double t = std::ceil(ymin / ys) * ys; t <= ymax + ys * 1e-9; t += ys) {
    put(svg, "<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"#dddddd\"/>\n",
        x0, py(t), x1, py(t));
    put(svg, "<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\">%.6g</text>\n",
        x0 - 6, py(t) + 4, t);
  }
  put(svg, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
           "stroke=\"black\"/>\n", x0, y0, x1 - x0, y1 - y0);
  put(svg, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n",
      (x0 + x1) / 2, height - 6, escape_xml(x_label).c_str());
  put(svg, "<text x=\"16\" y=\"%g\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 16 %g)\">%s</text>\n",
      (y0 + y1) / 2, (y0 + y1) / 2, escape_xml(y_label).c_str());

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % kPaletteSize];
    const auto& s = series[si];
    if (!s.xs.empty()) {
      put(svg, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" points=\"", color);
      for (std::size_t i = 0; i < s.xs.size(); ++i)
        put(svg, "%.2f,%.2f ", px(s.xs[i]), py(s.ys[i]));
      svg += "\"/>\n";
    }
    double ly = y0 + 14 + 16 * static_cast<double>(si);
    put(svg, "<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"%s\" "
             "stroke-width=\"1.5\"/>\n", x1 - 150, ly, x1 - 126, ly, color);
    put(svg, "<text x=\"%g\" y=\"%.2f\">%s</text>\n", x1 - 120, ly + 4,
        escape_xml(s.name).c_str());
  }
  svg += "</svg>\n";
  return svg;
}

std::string heatmap_pair_svg(const std::vector<double>& left, const std::vector<double>& right,
                             int grid, const std::string& left_title,
                             const std::string& right_title) {
  if (grid <= 0) throw InvariantError("heatmap_pair_svg: grid must be positive");
  std::size_t cells = static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid);
  if (left.size() != cells || right.size() != cells)
    throw InvariantError("heatmap_pair_svg: value count != grid*grid");
  double vmax = 0;
  for (double v : left) {
    if (!std::isfinite(v)) throw InvariantError("heatmap_pair_svg: non-finite value");
    vmax = std::max(vmax, std::fabs(v));
  }
  for (double v : right) {
    if (!std::isfinite(v)) throw InvariantError("heatmap_pair_svg: non-finite value");
    vmax = std::max(vmax, std::fabs(v));
  }
  if (vmax == 0) vmax = 1;  // all-zero grids render white

  const double cell = 36;
  const double margin = 20, top = 34, gap = 46, bottom = 28;
  const double panel = cell * grid;
  const double width = margin * 2 + panel * 2 + gap;
  const double height = top + panel + bottom;

  std::string svg;
  put(svg,
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
      "viewBox=\"0 0 %g %g\" font-family=\"sans-serif\" font-size=\"12\">\n",
      width, height, width, height);
  put(svg, "<rect width=\"%g\" height=\"%g\" fill=\"white\"/>\n", width, height);

  const std::string titles[2] = {left_title, right_title};
  const std::vector<double>* grids[2] = {&left, &right};
  for (int p = 0; p < 2; ++p) {
    double ox = margin + p * (panel + gap);
    put(svg, "<text x=\"%.2f\" y=\"22\" text-anchor=\"middle\">%s</text>\n",
        ox + panel / 2, escape_xml(titles[p]).c_str());
    for (int by = 0; by < grid; ++by) {
      for (int bx = 0; bx < grid; ++bx) {
        double v = (*grids[p])[static_cast<std::size_t>(by) * grid + bx];
        double t = std::min(std::fabs(v) / vmax, 1.0);
        // white -> red for positive, white -> blue for negative
        int r, g, b;
        if (v >= 0) {
          r = static_cast<int>(std::lround(255 + (214 - 255) * t));
          g = static_cast<int>(std::lround(255 + (39 - 255) * t));
          b = static_cast<int>(std::lround(255 + (40 - 255) * t));
        } else {
          r = static_cast<int>(std::lround(255 + (31 - 255) * t));
          g = static_cast<int>(std::lround(255 + (119 - 255) * t));
          b = static_cast<int>(std::lround(255 + (180 - 255) * t));
        }
        put(svg,
            "<rect x=\"%.2f\" y=\"%.2f\" width=\"%g\" height=\"%g\" "
            "fill=\"rgb(%d,%d,%d)\" stroke=\"#cccccc\"/>\n",
            ox + bx * cell, top + (grid - 1 - by) * cell, cell, cell, r, g, b);
      }
    }
  }
  put(svg, "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">max |value| = %.6g</text>\n",
      width / 2, height - 10, vmax);
  svg += "</svg>\n";
  return svg;
}

}  // namespace tactsim
