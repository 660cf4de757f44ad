#include "toolmotion/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "toolmotion/acquisition.hpp"
#include "toolmotion/geometry.hpp"

namespace toolmotion {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 48.0;

std::string coord(double v) { return fmt::format("{:.3f}", v); }

// Blue at t = 0, red at t = 1.
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255.0 * t));
  const int b = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  return fmt::format("#{:02x}40{:02x}", r, b);
}

struct Frame {
  double min_x = 0.0, max_x = 1.0, min_y = 0.0, max_y = 1.0;
  double scale = 1.0;

  // SVG y grows downwards.
  double px(double x) const { return kMargin + (x - min_x) * scale; }
  double py(double y) const { return kHeight - kMargin - (y - min_y) * scale; }
};

Frame fit(const std::vector<Vec2>& pts) {
  Frame f;
  if (pts.empty()) return f;
  f.min_x = f.max_x = pts.front().x;
  f.min_y = f.max_y = pts.front().y;
  for (const Vec2& p : pts) {
    f.min_x = std::min(f.min_x, p.x);
    f.max_x = std::max(f.max_x, p.x);
    f.min_y = std::min(f.min_y, p.y);
    f.max_y = std::max(f.max_y, p.y);
  }
  const double span = std::max({f.max_x - f.min_x, f.max_y - f.min_y, 1e-9});
  f.scale = std::min(kWidth, kHeight) - 2.0 * kMargin;
  f.scale /= span;
  return f;
}

void open_svg(std::ostringstream& out, const std::string& title) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "  <title>" << xml_escape(title) << "</title>\n"
      << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "  <text x=\"" << kMargin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
}

}  // namespace

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<double> cumulative_area_curve(const SearchGraph& g) {
  std::vector<double> out;
  for (std::size_t i = 3; i <= g.size(); ++i) out.push_back(g.area(i));
  return out;
}

std::string cumulative_area_csv(const SearchGraph& g) {
  std::ostringstream out;
  out << "stroke,area\n";
  for (std::size_t i = 3; i <= g.size(); ++i) out << i << ',' << format_number(g.area(i)) << '\n';
  return out.str();
}

std::string cumulative_area_svg(const SearchGraph& g, const std::string& title) {
  std::ostringstream out;
  open_svg(out, title);
  const std::vector<double> curve = cumulative_area_curve(g);
  const double max_area = curve.empty() ? 1.0 : std::max(*std::max_element(curve.begin(), curve.end()), 1e-9);
  const double n = static_cast<double>(std::max<std::size_t>(g.size(), 4));
  const double plot_w = kWidth - 2.0 * kMargin;
  const double plot_h = kHeight - 2.0 * kMargin;
  auto px = [&](double i) { return kMargin + (i - 3.0) / (n - 3.0) * plot_w; };
  auto py = [&](double a) { return kHeight - kMargin - a / max_area * plot_h; };

  out << "  <line x1=\"" << coord(kMargin) << "\" y1=\"" << coord(kHeight - kMargin) << "\" x2=\""
      << coord(kWidth - kMargin) << "\" y2=\"" << coord(kHeight - kMargin) << "\" stroke=\"black\"/>\n"
      << "  <line x1=\"" << coord(kMargin) << "\" y1=\"" << coord(kMargin) << "\" x2=\"" << coord(kMargin)
      << "\" y2=\"" << coord(kHeight - kMargin) << "\" stroke=\"black\"/>\n"
      << "  <text x=\"" << coord(kWidth / 2) << "\" y=\"" << coord(kHeight - 12) << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\" text-anchor=\"middle\">stroke index</text>\n"
      << "  <text x=\"" << coord(kMargin) << "\" y=\"" << coord(kMargin - 6) << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\">max area " << xml_escape(format_number(max_area)) << " mm^2</text>\n";
  if (!curve.empty()) {
    out << "  <polyline fill=\"none\" stroke=\"#1f4fbf\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < curve.size(); ++k) {
      if (k) out << ' ';
      out << coord(px(static_cast<double>(k + 3))) << ',' << coord(py(curve[k]));
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string search_graph_svg(const SearchGraph& g, const std::string& title) {
  std::ostringstream out;
  open_svg(out, title);
  const Frame f = fit(g.vertices);
  const double max_len =
      g.lengths.empty() ? 1.0 : std::max(*std::max_element(g.lengths.begin(), g.lengths.end()), 1e-9);

  const std::vector<Vec2> hull = convex_hull(g.vertices);
  if (!hull.empty()) {
    out << "  <polygon fill=\"#f0f0f0\" stroke=\"#606060\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < hull.size(); ++k) {
      if (k) out << ' ';
      out << coord(f.px(hull[k].x)) << ',' << coord(f.py(hull[k].y));
    }
    out << "\"/>\n";
  }

  const double denom = g.size() > 1 ? static_cast<double>(g.size() - 1) : 1.0;
  for (std::size_t k = 1; k < g.size(); ++k) {
    const Vec2& a = g.vertices[k - 1];
    const Vec2& b = g.vertices[k];
    out << "  <line x1=\"" << coord(f.px(a.x)) << "\" y1=\"" << coord(f.py(a.y)) << "\" x2=\"" << coord(f.px(b.x))
        << "\" y2=\"" << coord(f.py(b.y)) << "\" stroke=\"" << ramp(static_cast<double>(k) / denom)
        << "\" stroke-opacity=\"0.6\"/>\n";
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2& p = g.vertices[k];
    const double len = k < g.lengths.size() ? g.lengths[k] : 0.0;
    const double r = 2.0 + 8.0 * len / max_len;
    out << "  <circle cx=\"" << coord(f.px(p.x)) << "\" cy=\"" << coord(f.py(p.y)) << "\" r=\"" << coord(r)
        << "\" fill=\"" << ramp(static_cast<double>(k) / denom) << "\"><title>stroke " << k << "</title></circle>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace toolmotion
