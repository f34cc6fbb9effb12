#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "reachkit/expr.hpp"
#include "reachkit/flow.hpp"
#include "reachkit/geometry.hpp"
#include "reachkit/grid.hpp"

namespace reachkit {

/// {x : ell(x) <= 0}, sampled inside the box [lo, hi].
struct LevelSet {
  Expr ell;
  std::vector<Expr> grad;
  Vec lo, hi;
};

/// Initial region of a location: a level set, a polyhedron, or a union of grid cells.
class InitialSet {
 public:
  static InitialSet level_set(Expr ell, int dim, Vec lo, Vec hi);
  static InitialSet polyhedron(Polyhedron P);
  static InitialSet cells(GridRegion region);

  [[nodiscard]] int dim() const;
  [[nodiscard]] bool is_level_set() const { return std::holds_alternative<LevelSet>(rep_); }
  [[nodiscard]] bool is_polyhedron() const { return std::holds_alternative<Polyhedron>(rep_); }
  [[nodiscard]] bool is_cells() const { return std::holds_alternative<GridRegion>(rep_); }
  [[nodiscard]] const LevelSet& as_level_set() const { return std::get<LevelSet>(rep_); }
  [[nodiscard]] const Polyhedron& as_polyhedron() const { return std::get<Polyhedron>(rep_); }
  [[nodiscard]] const GridRegion& as_cells() const { return std::get<GridRegion>(rep_); }

  [[nodiscard]] bool contains(const Vec& x, double tol = 1e-9) const;
  /// Axis-aligned box enclosing the set.
  [[nodiscard]] std::pair<Vec, Vec> bounding_box() const;
  /// Over: cells meeting the set. Under: cells whose corners all lie inside.
  [[nodiscard]] GridRegion rasterize(double h, GridMode mode) const;

 private:
  explicit InitialSet(std::variant<LevelSet, Polyhedron, GridRegion> rep) : rep_(std::move(rep)) {}
  std::variant<LevelSet, Polyhedron, GridRegion> rep_;
};

enum class FlowTag { Outflow, Tangential, Inflow };

/// Boundary samples of an initial set with their outward-flow classification.
/// All samples are kept; S1+ is the outflow and tangential part.
struct BoundaryFront {
  std::vector<Vec> points;
  std::vector<FlowTag> tags;
  std::vector<double> dots;  // outward normal . f at the sample
  std::vector<std::pair<int, int>> links;  // neighbouring samples along the boundary curve (2D)
  double spacing = 0.0;
  int dropped = 0;  // samples discarded because the gradient was undefined

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] std::vector<int> s1_plus() const;
  [[nodiscard]] std::vector<int> outflow() const;
};

/// |dot| <= this counts as tangential.
double tangential_tol(const Vec& f);

/// Samples the boundary with target spacing and tags each sample by the sign of
/// its outward normal against f. Corner samples shared by several faces take the
/// largest dot product over the faces through them.
BoundaryFront classify_boundary(const InitialSet& init, const flow::Dynamics& dyn, double spacing);

}  // namespace reachkit
