#include "ganad/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ganad {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::vector<Polyline>& lines, int width, int height) {
  const double left = 60, right = 20, top = 30, bottom = 30;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t n = 0;
  for (const auto& l : lines) {
    n = std::max(n, l.values.size());
    for (double v : l.values)
      if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi == lo) hi = lo + 1.0;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto x_at = [&](std::size_t i) { return left + (n > 1 ? pw * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0); };
  auto y_at = [&](double v) { return top + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << fmt(width / 2.0) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n";
  s << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
    << "\" fill=\"none\" stroke=\"#888\"/>\n";
  s << "<text x=\"" << fmt(left - 4) << "\" y=\"" << fmt(top + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
    << fmt(hi) << "</text>\n";
  s << "<text x=\"" << fmt(left - 4) << "\" y=\"" << fmt(top + ph) << "\" text-anchor=\"end\" font-size=\"10\">"
    << fmt(lo) << "</text>\n";
  s << "<text x=\"" << fmt(left + pw) << "\" y=\"" << fmt(top + ph + 14) << "\" text-anchor=\"end\" font-size=\"10\">"
    << (n > 0 ? n - 1 : 0) << "</text>\n";
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto& l = lines[k];
    s << "<polyline fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < l.values.size(); ++i) {
      if (!std::isfinite(l.values[i])) continue;
      s << (first ? "" : " ") << fmt(x_at(i)) << ',' << fmt(y_at(l.values[i]));
      first = false;
    }
    s << "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(k + 1);
    s << "<text x=\"" << fmt(left + pw - 6) << "\" y=\"" << fmt(ly) << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
      << l.color << "\">" << escape(l.label) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_line_chart(const std::filesystem::path& path, const std::string& title, const std::vector<Polyline>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << render_line_chart(title, lines);
}

}  // namespace ganad
