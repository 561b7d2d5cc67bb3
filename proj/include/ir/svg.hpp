#pragma once

// Static SVG summary of a chart spec: the aggregate view only, with a short
// caption per mark. Meant for reports and quick looks from the CLI.

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>

#include "ir/chartspec.hpp"

namespace ir {

namespace detail {

inline std::string svg_escape(const std::string& s) {
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

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Frame {
  double x0 = 60, y0 = 20, w = 520, h = 300;
  double lo_x = 0, hi_x = 1, lo_y = 0, hi_y = 1;
  double px(double x) const { return x0 + (hi_x == lo_x ? 0.5 : (x - lo_x) / (hi_x - lo_x)) * w; }
  double py(double y) const { return y0 + h - (hi_y == lo_y ? 0.5 : (y - lo_y) / (hi_y - lo_y)) * h; }
};

}  // namespace detail

inline std::string render_svg_summary(const ChartSpec& spec) {
  using detail::fmt;
  std::ostringstream o;
  detail::Frame f;
  const double height = f.y0 + f.h + 40 + 16.0 * static_cast<double>(spec.marks.size() + spec.diagnostics.size());
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"" << fmt(height) << "\">\n";
  o << "<rect x=\"" << f.x0 << "\" y=\"" << f.y0 << "\" width=\"" << f.w << "\" height=\"" << f.h
    << "\" fill=\"none\" stroke=\"#888\"/>\n";

  switch (spec.kind) {
    case ChartKind::bar: {
      double hi = 0, lo = 0;
      for (const auto& m : spec.marks)
        if (auto y = as_number(m.channels.at("y"))) hi = std::max(hi, *y), lo = std::min(lo, *y);
      f.lo_y = lo;
      f.hi_y = hi == lo ? lo + 1 : hi;
      const double slot = f.w / static_cast<double>(std::max<std::size_t>(1, spec.marks.size()));
      for (std::size_t i = 0; i < spec.marks.size(); ++i) {
        const auto& m = spec.marks[i];
        const double x = f.x0 + slot * (static_cast<double>(i) + 0.15);
        if (auto y = as_number(m.channels.at("y"))) {
          const double top = std::min(f.py(*y), f.py(0)), bottom = std::max(f.py(*y), f.py(0));
          o << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(slot * 0.7)
            << "\" height=\"" << fmt(bottom - top) << "\" fill=\"#4a7ab5\"/>\n";
        } else {
          o << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(f.py(0) - 4) << "\" font-size=\"10\">n/a</text>\n";
        }
      }
      break;
    }
    case ChartKind::scatter_regression: {
      if (spec.x_extent) f.lo_x = spec.x_extent->first, f.hi_x = spec.x_extent->second;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& p : spec.points) lo = std::min(lo, p.y), hi = std::max(hi, p.y);
      if (spec.points.empty()) lo = 0, hi = 1;
      f.lo_y = lo;
      f.hi_y = hi;
      for (const auto& p : spec.points)
        o << "<circle cx=\"" << fmt(f.px(p.x)) << "\" cy=\"" << fmt(f.py(p.y))
          << "\" r=\"1.5\" fill=\"#999\"/>\n";
      for (const auto& m : spec.marks) {
        auto slope = as_number(m.channels.at("slope")), icpt = as_number(m.channels.at("intercept"));
        if (!slope || !icpt) continue;
        const double ya = *icpt + *slope * f.lo_x, yb = *icpt + *slope * f.hi_x;
        o << "<line x1=\"" << fmt(f.px(f.lo_x)) << "\" y1=\"" << fmt(f.py(ya)) << "\" x2=\""
          << fmt(f.px(f.hi_x)) << "\" y2=\"" << fmt(f.py(yb)) << "\" stroke=\"#c33\" stroke-width=\"2\"/>\n";
      }
      break;
    }
    case ChartKind::bubble: {
      for (const auto& m : spec.marks) {
        auto x = as_number(m.channels.at("x")), y = as_number(m.channels.at("y"));
        if (!x || !y) continue;
        const double r = 4 + 30 * as_number(m.channels.at("size")).value_or(0);
        auto color = m.channels.at("color");
        const std::string* c = std::get_if<std::string>(&color);
        const char* fill = !c ? "#bbb" : *c == "positive" ? "#3a8" : *c == "negative" ? "#c54" : "#bbb";
        o << "<circle cx=\"" << fmt(f.px(*x)) << "\" cy=\"" << fmt(f.py(*y)) << "\" r=\"" << fmt(r)
          << "\" fill=\"" << fill << "\" fill-opacity=\"0.6\" stroke=\"" << (m.significant ? "#000" : "none")
          << "\" stroke-width=\"2\"/>\n";
      }
      break;
    }
  }

  double line_y = f.y0 + f.h + 24;
  for (const auto& m : spec.marks) {
    std::string caption = m.label + ":";
    for (const auto& [ch, v] : m.channels) {
      if (auto d = as_number(v)) caption += " " + ch + "=" + fmt(*d);
      else if (!is_defined(v)) caption += " " + ch + "=undefined";
    }
    caption += " (" + std::to_string(m.fold_marks.size()) + " folds)";
    if (m.undefined) caption += " [" + m.reason + "]";
    o << "<text x=\"10\" y=\"" << fmt(line_y) << "\" font-size=\"11\">" << detail::svg_escape(caption)
      << "</text>\n";
    line_y += 16;
  }
  for (const auto& d : spec.diagnostics) {
    o << "<text x=\"10\" y=\"" << fmt(line_y) << "\" font-size=\"11\" fill=\"#a60\">"
      << detail::svg_escape(d) << "</text>\n";
    line_y += 16;
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace ir
