#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <vector>

#include "reachkit/geometry.hpp"

namespace reachkit {

enum class GridMode { Over, Under };

/// Integer cell index; unused trailing coordinates are 0.
using CellIndex = std::array<int, 3>;

/// Sparse union of axis-aligned cells [i h, (i+1) h) in up to three dimensions.
/// Cells are aligned to the origin, so regions with the same h combine exactly.
class GridRegion {
 public:
  GridRegion() = default;
  GridRegion(int dim, double h, GridMode mode = GridMode::Over);

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] double cell_size() const { return h_; }
  [[nodiscard]] GridMode mode() const { return mode_; }
  void set_mode(GridMode m) { mode_ = m; }

  [[nodiscard]] CellIndex cell_of(const Vec& x) const;
  [[nodiscard]] Vec cell_lo(const CellIndex& c) const;
  [[nodiscard]] Vec cell_center(const CellIndex& c) const;
  /// The 2^dim corners of a cell.
  [[nodiscard]] std::vector<Vec> cell_corners(const CellIndex& c) const;

  void mark(const CellIndex& c);
  void mark_point(const Vec& x);
  /// Marks every cell whose closed box meets the segment [a, b].
  void mark_segment(const Vec& a, const Vec& b);
  /// Marks every cell meeting the closed box [lo, hi].
  void mark_box(const Vec& lo, const Vec& hi);
  void erase(const CellIndex& c);

  [[nodiscard]] bool has(const CellIndex& c) const;
  /// True when the cell containing x is marked.
  [[nodiscard]] bool contains(const Vec& x) const { return has(cell_of(x)); }

  [[nodiscard]] std::size_t size() const { return cells_.size(); }
  [[nodiscard]] bool empty() const { return cells_.empty(); }
  /// Cells in a fixed lexicographic order.
  [[nodiscard]] std::vector<CellIndex> cells() const;

  /// Bounding box of the marked cells; throws EmptyBoundary when empty.
  [[nodiscard]] std::pair<Vec, Vec> bounds() const;

  void unite(const GridRegion& other);
  [[nodiscard]] GridRegion intersection(const GridRegion& other) const;
  [[nodiscard]] GridRegion difference(const GridRegion& other) const;
  [[nodiscard]] bool subset_of(const GridRegion& other) const;

  friend bool operator==(const GridRegion& a, const GridRegion& b) { return a.cells_ == b.cells_ && a.h_ == b.h_; }

 private:
  [[nodiscard]] std::int64_t pack(const CellIndex& c) const;
  [[nodiscard]] CellIndex unpack(std::int64_t key) const;
  void check_compatible(const GridRegion& other) const;

  int dim_ = 0;
  double h_ = 0.0;
  GridMode mode_ = GridMode::Over;
  std::set<std::int64_t> cells_;
};

/// Hausdorff distance between the cell-center sets (0 when both empty,
/// +inf when exactly one is empty).
double hausdorff(const GridRegion& a, const GridRegion& b);

/// Number of cells in exactly one of the two regions.
std::size_t symmetric_difference_count(const GridRegion& a, const GridRegion& b);

/// Does the closed cell box meet P?
bool cell_meets(const GridRegion& grid, const CellIndex& c, const Polyhedron& P);
/// Are all corners of the cell inside P (so the cell is, P being convex)?
bool cell_inside(const GridRegion& grid, const CellIndex& c, const Polyhedron& P, double tol = 0.0);

/// Cells meeting P (over) or contained in P (under), searched inside [lo, hi].
GridRegion rasterize_polyhedron(const Polyhedron& P, double h, GridMode mode, const Vec& lo, const Vec& hi);

}  // namespace reachkit
