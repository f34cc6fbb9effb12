#include "reachkit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace reachkit {

namespace {

const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};

std::ofstream open(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Model, "cannot write " + path);
  os << std::setprecision(12);
  return os;
}

struct View {
  double x0, y0, x1, y1;
  double scale;  // pixels per unit
  [[nodiscard]] double px(double x) const { return (x - x0) * scale; }
  [[nodiscard]] double py(double y) const { return (y1 - y) * scale; }
};

View make_view(Vec lo, Vec hi) {
  const double pad = 0.1 * std::max({hi(0) - lo(0), hi(1) - lo(1), 1e-6});
  View v{lo(0) - pad, lo(1) - pad, hi(0) + pad, hi(1) + pad, 1.0};
  v.scale = 600.0 / std::max(v.x1 - v.x0, v.y1 - v.y0);
  return v;
}

void svg_open(std::ostream& os, const View& v) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (v.x1 - v.x0) * v.scale << "\" height=\""
     << (v.y1 - v.y0) * v.scale << "\">\n";
}

/// Segment of {n.x = b} inside the view box, if any.
bool clip_line(const Halfspace& h, const View& v, Vec& a, Vec& b) {
  std::vector<Vec> hits;
  const double nx = h.normal(0), ny = h.normal(1);
  if (std::abs(ny) > 1e-15) {
    for (double x : {v.x0, v.x1}) {
      const double y = (h.offset - nx * x) / ny;
      if (y >= v.y0 - 1e-12 && y <= v.y1 + 1e-12) hits.push_back((Vec(2) << x, y).finished());
    }
  }
  if (std::abs(nx) > 1e-15) {
    for (double y : {v.y0, v.y1}) {
      const double x = (h.offset - ny * y) / nx;
      if (x >= v.x0 - 1e-12 && x <= v.x1 + 1e-12) hits.push_back((Vec(2) << x, y).finished());
    }
  }
  if (hits.size() < 2) return false;
  a = hits[0];
  b = hits[0];
  for (const auto& p : hits) {
    if ((p - a).norm() > (b - a).norm()) b = p;
  }
  return (b - a).norm() > 0.0;
}

}  // namespace

PlotFormat parse_plot_format(const std::string& s) {
  if (s == "csv") return PlotFormat::Csv;
  if (s == "svg") return PlotFormat::Svg;
  throw Error(ErrorCode::Model, "plot format must be csv or svg");
}

PlotSummary plot_cells(const std::vector<GridRegion>& parts, PlotFormat fmt, const std::string& path) {
  for (const auto& g : parts) {
    if (g.dim() != 2) throw Error(ErrorCode::DimUnsupported, "plots need two-dimensional data");
  }
  PlotSummary s;
  s.file = path;
  auto os = open(path);
  if (fmt == PlotFormat::Csv) {
    os << "segment,x1,x2\n";
    for (size_t i = 0; i < parts.size(); ++i) {
      for (const auto& c : parts[i].cells()) {
        const Vec x = parts[i].cell_center(c);
        os << i << "," << x(0) << "," << x(1) << "\n";
        ++s.rows;
      }
    }
    return s;
  }
  Vec lo = Vec::Zero(2), hi = Vec::Ones(2);
  bool any = false;
  for (const auto& g : parts) {
    if (g.empty()) continue;
    const auto [a, b] = g.bounds();
    lo = any ? Vec(lo.cwiseMin(a)) : a;
    hi = any ? Vec(hi.cwiseMax(b)) : b;
    any = true;
  }
  const View v = make_view(lo, hi);
  svg_open(os, v);
  for (size_t i = 0; i < parts.size(); ++i) {
    const double h = parts[i].cell_size();
    os << "<g id=\"segment-" << i << "\" fill=\"" << kPalette[i % 8] << "\" fill-opacity=\"0.5\">\n";
    for (const auto& c : parts[i].cells()) {
      const Vec x = parts[i].cell_lo(c);
      os << "<rect x=\"" << v.px(x(0)) << "\" y=\"" << v.py(x(1) + h) << "\" width=\"" << h * v.scale
         << "\" height=\"" << h * v.scale << "\"/>\n";
      ++s.rows;
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return s;
}

PlotSummary plot_tube(const ReachTube& tube, PlotFormat fmt, const std::string& path) {
  std::vector<GridRegion> parts;
  for (const auto& seg : tube.segments) parts.push_back(seg.cells);
  if (parts.empty() && tube.cell > 0.0 && !tube.initial.empty()) parts.push_back(tube.initial);
  return plot_cells(parts, fmt, path);
}

int count_active_edges(const Polyhedron& P, double tol) {
  const auto vs = vertices_2d(P);
  int active = 0;
  for (const auto& row : P.inequalities()) {
    const Halfspace u = row.normalized();
    std::vector<Vec> tight;
    for (const auto& x : vs) {
      if (std::abs(u.eval(x)) > tol * (1.0 + x.norm())) continue;
      bool dup = false;
      for (const auto& t : tight) dup = dup || (t - x).norm() <= 1e-9;
      if (!dup) tight.push_back(x);
    }
    if (tight.size() >= 2) ++active;
  }
  return active;
}

PlotSummary plot_polygon(const poly::Assembled& as, PlotFormat fmt, const std::string& path) {
  if (as.P.dim() != 2) throw Error(ErrorCode::DimUnsupported, "plots need two-dimensional data");
  PlotSummary s;
  s.file = path;
  s.candidate_edges = static_cast<int>(as.P.inequalities().size());
  s.active_edges = count_active_edges(as.P);
  const auto vs = vertices_2d(as.P);
  auto os = open(path);
  if (fmt == PlotFormat::Csv) {
    os << "polygon,x1,x2\n";
    for (const auto& x : vs) {
      os << 0 << "," << x(0) << "," << x(1) << "\n";
      ++s.rows;
    }
    return s;
  }
  Vec lo = vs.front(), hi = vs.front();
  for (const auto& x : vs) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  const View v = make_view(lo, hi);
  svg_open(os, v);
  os << "<polygon fill=\"#cccccc\" stroke=\"black\" stroke-width=\"2\" points=\"";
  for (const auto& x : vs) os << v.px(x(0)) << "," << v.py(x(1)) << " ";
  os << "\"/>\n";
  ++s.rows;
  for (size_t i = 0; i < as.rows.size(); ++i) {
    Vec a, b;
    if (!clip_line(as.P.inequalities()[i], v, a, b)) continue;
    const int g = static_cast<int>(as.rows[i].group);
    os << "<line class=\"" << poly::to_string(as.rows[i].group) << "\" x1=\"" << v.px(a(0)) << "\" y1=\"" << v.py(a(1))
       << "\" x2=\"" << v.px(b(0)) << "\" y2=\"" << v.py(b(1)) << "\" stroke=\"" << kPalette[g % 8]
       << "\" stroke-dasharray=\"6,4\"/>\n";
    ++s.rows;
  }
  os << "</svg>\n";
  return s;
}

}  // namespace reachkit
