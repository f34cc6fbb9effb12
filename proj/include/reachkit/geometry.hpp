#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "reachkit/error.hpp"
#include "reachkit/lp.hpp"

namespace reachkit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Tight-row and duplicate-row tolerance used throughout the polyhedral kernel.
inline constexpr double kGeomTol = 1e-9;

/// {x : normal^T x - offset <= 0}; as an equality row, normal^T x - offset = 0.
struct Halfspace {
  Vec normal;
  double offset = 0.0;

  Halfspace() = default;
  Halfspace(Vec n, double b) : normal(std::move(n)), offset(b) {}

  [[nodiscard]] double eval(const Vec& x) const { return normal.dot(x) - offset; }
  [[nodiscard]] int dim() const { return static_cast<int>(normal.size()); }
  /// Scales to a unit normal. Throws DegenerateNormal on a zero normal.
  [[nodiscard]] Halfspace normalized() const;
};

class Polyhedron {
 public:
  Polyhedron() = default;
  explicit Polyhedron(int dim) : dim_(dim) {}
  Polyhedron(int dim, std::vector<Halfspace> inequalities, std::vector<Halfspace> equalities = {});

  /// The full space R^dim.
  static Polyhedron universe(int dim) { return Polyhedron(dim); }
  /// Axis-aligned box [lo, hi].
  static Polyhedron box(const Vec& lo, const Vec& hi);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const std::vector<Halfspace>& inequalities() const { return inequalities_; }
  [[nodiscard]] const std::vector<Halfspace>& equalities() const { return equalities_; }

  void add_inequality(Halfspace h);
  void add_equality(Halfspace h);

  /// Every row satisfied with residual <= tol (equalities as |residual| <= tol).
  [[nodiscard]] bool contains(const Vec& x, double tol = kGeomTol) const;
  /// Largest row violation at x (0 when inside).
  [[nodiscard]] double max_violation(const Vec& x) const;

  /// Inequalities as matrix/vector pair (A x <= b).
  [[nodiscard]] Mat le_matrix() const;
  [[nodiscard]] Vec le_rhs() const;
  [[nodiscard]] Mat eq_matrix() const;
  [[nodiscard]] Vec eq_rhs() const;

  /// LP over the polyhedron: maximize c^T x.
  [[nodiscard]] lp::Result maximize(const Vec& c) const;

 private:
  int dim_ = 0;
  std::vector<Halfspace> inequalities_;
  std::vector<Halfspace> equalities_;
};

/// F = {x : a_i^T x <= b_i (i < k), a_k^T x = b_k}.
struct Face {
  std::vector<Vec> side_normals;
  std::vector<double> side_offsets;
  Vec base_normal;
  double base_offset = 0.0;
  bool orthonormalized = false;

  [[nodiscard]] int dim() const { return static_cast<int>(base_normal.size()); }
  [[nodiscard]] int side_count() const { return static_cast<int>(side_normals.size()); }
  [[nodiscard]] Polyhedron as_polyhedron() const;
  [[nodiscard]] bool contains(const Vec& x, double tol = kGeomTol) const { return as_polyhedron().contains(x, tol); }
};

/// Rewrites the face so every side normal is unit and orthogonal to the unit
/// base normal. Side rows whose projection vanishes are dropped when vacuous.
Face normalize_and_orthogonalize(const Face& raw);

/// Face image {e^{A delta} x : x in face}, returned orthonormalized.
Face propagate_face(const Face& face, const Mat& A, double delta);

enum class Boundedness { Bounded, Unbounded, Empty };

Boundedness boundedness(const Polyhedron& P);
/// True iff the recession cone is {0}. Empty polyhedra count as bounded.
bool is_bounded(const Polyhedron& P);
bool is_empty(const Polyhedron& P);

/// Vertices of a bounded, nonempty 2D polyhedron in counter-clockwise order.
std::vector<Vec> vertices_2d(const Polyhedron& P);
/// Shoelace area of the polygon described by P (0 for degenerate polygons).
double area_2d(const Polyhedron& P);

struct Hull2D {
  Polyhedron polygon;
  std::vector<Vec> vertices;  // counter-clockwise
  bool degenerate = false;    // collinear input: the segment between the extreme points
};

/// Minimal H-representation of the convex hull, unit outward normals. Row i
/// supports the edge from vertices[i] to vertices[i+1].
Hull2D convex_hull_2d(const std::vector<Vec>& points);

/// Row concatenation with duplicate rows (after normalization) removed.
Polyhedron intersect(const std::vector<Polyhedron>& parts);

}  // namespace reachkit
