#pragma once

// Six-panel SVG line chart of a twist track (vx vy vz / wx wy wz), optionally over truth.

#include "revo/core_types.hpp"
#include "revo/simulator.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace revo {

struct PlotStyle {
  int panel_width = 480;
  int panel_height = 200;
  int margin = 50;
  std::size_t max_points = 4000;  // per trace, evenly decimated above this
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string svg_polyline(const std::vector<TwistSample>& s, int channel, double t0, double t1, double lo, double hi,
                                double x0, double y0, double w, double h, std::size_t max_points, const char* color,
                                const char* cls) {
  std::string pts;
  const std::size_t step = std::max<std::size_t>(1, s.size() / std::max<std::size_t>(1, max_points));
  for (std::size_t i = 0; i < s.size(); i += step) {
    const double t = s[i].stamp.seconds();
    const double v = channel < 3 ? s[i].linear(channel) : s[i].angular(channel - 3);
    const double x = x0 + (t1 > t0 ? (t - t0) / (t1 - t0) : 0.0) * w;
    const double y = y0 + h - (hi > lo ? (v - lo) / (hi - lo) : 0.5) * h;
    pts += svg_num(x) + "," + svg_num(y) + " ";
  }
  if (!pts.empty()) pts.pop_back();
  return std::string("<polyline class=\"") + cls + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
}

}  // namespace detail

inline std::string render_twist_svg(const std::vector<TwistSample>& estimate, const std::vector<TwistSample>& truth,
                                    const PlotStyle& style = {}) {
  static const std::array<const char*, 6> labels = {"vx [m/s]", "vy [m/s]", "vz [m/s]",
                                                    "wx [rad/s]", "wy [rad/s]", "wz [rad/s]"};
  double t0 = std::numeric_limits<double>::infinity(), t1 = -t0;
  for (const auto* s : {&estimate, &truth})
    if (!s->empty()) {
      t0 = std::min(t0, s->front().stamp.seconds());
      t1 = std::max(t1, s->back().stamp.seconds());
    }
  if (!std::isfinite(t0)) t0 = t1 = 0.0;

  const int cols = 2, rows = 3;
  const int pw = style.panel_width, ph = style.panel_height, m = style.margin;
  const int width = cols * (pw + 2 * m), height = rows * (ph + 2 * m);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\" viewBox=\"0 0 "
      << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int c = 0; c < 6; ++c) {
    const int col = c / 3, row = c % 3;
    const double x0 = col * (pw + 2 * m) + m, y0 = row * (ph + 2 * m) + m;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* s : {&estimate, &truth})
      for (const auto& p : *s) {
        const double v = c < 3 ? p.linear(c) : p.angular(c - 3);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (!std::isfinite(lo)) lo = -1.0, hi = 1.0;
    if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;

    out << "<g class=\"panel\" id=\"panel-" << c << "\">\n";
    out << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text class=\"label\" x=\"" << x0 << "\" y=\"" << y0 - 8 << "\" font-size=\"14\">" << labels[c] << "</text>\n";
    out << "<text x=\"" << x0 - 4 << "\" y=\"" << y0 + 10 << "\" font-size=\"10\" text-anchor=\"end\">"
        << detail::svg_num(hi) << "</text>\n";
    out << "<text x=\"" << x0 - 4 << "\" y=\"" << y0 + ph << "\" font-size=\"10\" text-anchor=\"end\">"
        << detail::svg_num(lo) << "</text>\n";
    out << "<text x=\"" << x0 << "\" y=\"" << y0 + ph + 14 << "\" font-size=\"10\">" << detail::svg_num(t0) << " s</text>\n";
    out << "<text x=\"" << x0 + pw << "\" y=\"" << y0 + ph + 14 << "\" font-size=\"10\" text-anchor=\"end\">"
        << detail::svg_num(t1) << " s</text>\n";
    if (!truth.empty())
      out << detail::svg_polyline(truth, c, t0, t1, lo, hi, x0, y0, pw, ph, style.max_points, "#888888", "truth");
    if (!estimate.empty())
      out << detail::svg_polyline(estimate, c, t0, t1, lo, hi, x0, y0, pw, ph, style.max_points, "#d62728", "estimate");
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace revo
