#include "cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "qrect/csv.hpp"

namespace qrect::cli {

namespace {

std::string f3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
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

// white -> deep blue
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 + t * (8 - 255)));
  const int g = static_cast<int>(std::lround(255 + t * (48 - 255)));
  const int b = static_cast<int>(std::lround(255 + t * (107 - 255)));
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

void header(std::ostringstream& s, int w, int h, const std::string& title) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
    << "</text>\n";
}

}  // namespace

std::string bar_chart_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<std::string>& labels, const std::vector<double>& values) {
  const int W = 640, H = 400, left = 70, right = 20, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  double vmax = 0.0;
  for (double v : values)
    if (std::isfinite(v)) vmax = std::max(vmax, v);
  std::ostringstream s;
  header(s, W, H, title);
  s << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << short_num(vmax)
    << "</text>\n";
  s << "<text x=\"" << left - 6 << "\" y=\"" << top + ph << "\" text-anchor=\"end\">0</text>\n";
  const std::size_t n = values.size();
  const double slot = n ? pw / static_cast<double>(n) : pw;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::isfinite(values[i]) ? values[i] : 0.0;
    const double bh = vmax > 0.0 ? ph * v / vmax : 0.0;
    const double x = left + slot * static_cast<double>(i) + 0.15 * slot;
    s << "<rect x=\"" << f3(x) << "\" y=\"" << f3(top + ph - bh) << "\" width=\"" << f3(0.7 * slot)
      << "\" height=\"" << f3(bh) << "\" fill=\"#3b6ea8\"><title>" << xml_escape(labels[i]) << ": "
      << csv::num(values[i]) << "</title></rect>\n";
    s << "<text x=\"" << f3(x + 0.35 * slot) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
      << xml_escape(labels[i]) << "</text>\n";
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << xml_escape(xlabel)
    << "</text>\n";
  s << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << top + ph / 2 << ")\">" << xml_escape(ylabel) << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string heatmap_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                        const std::vector<HeatCell>& cells, double x0, double x1, double y0, double y1) {
  const int W = 560, H = 480, left = 60, top = 40, P = 400, legend_x = left + P + 30;
  double vmax = 0.0;
  for (const auto& c : cells)
    if (std::isfinite(c.value)) vmax = std::max(vmax, c.value);
  const double sx = P / (x1 - x0), sy = P / (y1 - y0);
  std::ostringstream s;
  header(s, W, H, title);
  for (const auto& c : cells) {
    const double t = vmax > 0.0 && std::isfinite(c.value) ? c.value / vmax : 0.0;
    // y grows upward in data space
    s << "<rect x=\"" << f3(left + (c.x - x0) * sx) << "\" y=\"" << f3(top + (y1 - c.y - c.h) * sy) << "\" width=\""
      << f3(c.w * sx) << "\" height=\"" << f3(c.h * sy) << "\" fill=\"" << ramp(t)
      << "\" stroke=\"#cccccc\" stroke-width=\"0.5\"><title>" << csv::num(c.value) << "</title></rect>\n";
  }
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << P << "\" height=\"" << P
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<text x=\"" << left << "\" y=\"" << top + P + 16 << "\" text-anchor=\"middle\">" << short_num(x0)
    << "</text>\n";
  s << "<text x=\"" << left + P << "\" y=\"" << top + P + 16 << "\" text-anchor=\"middle\">" << short_num(x1)
    << "</text>\n";
  s << "<text x=\"" << left - 6 << "\" y=\"" << top + P << "\" text-anchor=\"end\">" << short_num(y0) << "</text>\n";
  s << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << short_num(y1) << "</text>\n";
  s << "<text x=\"" << left + P / 2 << "\" y=\"" << H - 20 << "\" text-anchor=\"middle\">" << xml_escape(xlabel)
    << "</text>\n";
  s << "<text x=\"20\" y=\"" << top + P / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << top + P / 2
    << ")\">" << xml_escape(ylabel) << "</text>\n";
  // legend: 0 at the bottom, max at the top
  s << "<defs><linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">"
    << "<stop offset=\"0\" stop-color=\"" << ramp(0.0) << "\"/><stop offset=\"1\" stop-color=\"" << ramp(1.0)
    << "\"/></linearGradient></defs>\n";
  s << "<rect x=\"" << legend_x << "\" y=\"" << top << "\" width=\"20\" height=\"" << P
    << "\" fill=\"url(#ramp)\" stroke=\"black\"/>\n";
  s << "<text x=\"" << legend_x + 26 << "\" y=\"" << top + 10 << "\">" << short_num(vmax) << "</text>\n";
  s << "<text x=\"" << legend_x + 26 << "\" y=\"" << top + P << "\">0</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace qrect::cli
