#pragma once

#include <string>
#include <vector>

#include "reachkit/facelift.hpp"
#include "reachkit/grid.hpp"
#include "reachkit/polyapprox.hpp"

namespace reachkit {

enum class PlotFormat { Csv, Svg };
PlotFormat parse_plot_format(const std::string& s);

struct PlotSummary {
  std::string file;
  std::size_t rows = 0;     // data rows (csv) or drawn shapes (svg)
  int candidate_edges = 0;  // polygon plots: rows of the polyhedron
  int active_edges = 0;     // rows tight along an edge of the polygon
};

/// One labelled cell set per entry; csv rows are "segment,x1,x2" cell centers.
PlotSummary plot_cells(const std::vector<GridRegion>& parts, PlotFormat fmt, const std::string& path);
PlotSummary plot_tube(const ReachTube& tube, PlotFormat fmt, const std::string& path);

/// The polygon of P with every row drawn as a line, stroked by its group.
/// csv rows are "polygon,x1,x2" vertices in counter-clockwise order.
PlotSummary plot_polygon(const poly::Assembled& as, PlotFormat fmt, const std::string& path);

/// Rows tight at two distinct polygon vertices.
int count_active_edges(const Polyhedron& P, double tol = 1e-9);

}  // namespace reachkit
