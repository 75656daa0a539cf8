#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "transop/experiments/report.hpp"

namespace transop::experiments {

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
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

} // namespace detail

/// Minimal static SVG line plot: first column on x, selected columns on y.
inline void write_svg_plot(std::ostream& os, const Table& t, const PlotRequest& req) {
  const double W = 720, H = 440, L = 70, R = 160, Tm = 40, B = 50;
  std::vector<std::size_t> ys;
  for (const auto& name : req.y_columns)
    for (std::size_t c = 0; c < t.columns.size(); ++c)
      if (t.columns[c] == name) ys.push_back(c);
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  auto yval = [&](double v) { return req.log_y ? std::log10(std::max(std::abs(v), 1e-300)) : v; };
  for (const auto& r : t.rows) {
    xmin = std::min(xmin, r[0]);
    xmax = std::max(xmax, r[0]);
    for (auto c : ys) {
      const double v = yval(r[c]);
      if (!std::isfinite(v)) continue;
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) {
    ymin = std::isfinite(ymin) ? ymin - 0.5 : 0.0;
    ymax = ymin + 1.0;
  }
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - Tm - B); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << detail::escape_xml(req.title) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << W - L - R << "\" height=\"" << H - Tm - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  const std::string ylab = req.log_y ? "1e" : "";
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\">" << detail::fmt(xmin) << "</text>\n";
  os << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\">" << detail::fmt(xmax) << "</text>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
     << detail::escape_xml(t.columns.empty() ? "" : t.columns[0]) << "</text>\n";
  os << "<text x=\"" << L - 6 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << ylab << detail::fmt(ymin) << "</text>\n";
  os << "<text x=\"" << L - 6 << "\" y=\"" << Tm + 10 << "\" text-anchor=\"end\">" << ylab << detail::fmt(ymax) << "</text>\n";
  os << "</g>\n";
  for (std::size_t s = 0; s < ys.size(); ++s) {
    const char* col = colors[s % 6];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : t.rows) {
      const double v = yval(r[ys[s]]);
      if (std::isfinite(v)) os << px(r[0]) << ',' << py(v) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << Tm + 16 + 18 * s << "\" fill=\"" << col
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::escape_xml(t.columns[ys[s]]) << "</text>\n";
  }
  os << "</svg>\n";
}

} // namespace transop::experiments
