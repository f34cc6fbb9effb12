#include "reachkit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

namespace reachkit {

namespace {

constexpr int kBits = 21;
constexpr std::int64_t kBias = std::int64_t{1} << (kBits - 1);
constexpr std::int64_t kMask = (std::int64_t{1} << kBits) - 1;

// Box [lo, hi] meets segment a + s (b - a), s in [0, 1]?
bool segment_meets_box(const Vec& a, const Vec& b, const Vec& lo, const Vec& hi) {
  double s0 = 0.0, s1 = 1.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double d = b(j) - a(j);
    if (std::abs(d) < 1e-300) {
      if (a(j) < lo(j) || a(j) > hi(j)) return false;
      continue;
    }
    double t0 = (lo(j) - a(j)) / d;
    double t1 = (hi(j) - a(j)) / d;
    if (t0 > t1) std::swap(t0, t1);
    s0 = std::max(s0, t0);
    s1 = std::min(s1, t1);
    if (s0 > s1) return false;
  }
  return true;
}

template <typename F>
void for_each_cell_in(const CellIndex& lo, const CellIndex& hi, int dim, F&& f) {
  CellIndex c = lo;
  for (int j = dim; j < 3; ++j) c[j] = 0;
  while (true) {
    f(c);
    int j = 0;
    for (; j < dim; ++j) {
      if (c[j] < hi[j]) {
        ++c[j];
        break;
      }
      c[j] = lo[j];
    }
    if (j == dim) return;
  }
}

}  // namespace

GridRegion::GridRegion(int dim, double h, GridMode mode) : dim_(dim), h_(h), mode_(mode) {
  if (dim < 1 || dim > 3) throw Error(ErrorCode::DimUnsupported, "grid regions support dimensions 1 to 3");
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::PreconditionViolated, "cell size must be positive");
}

CellIndex GridRegion::cell_of(const Vec& x) const {
  if (x.size() != dim_) throw Error(ErrorCode::DimMismatch, "point dimension does not match grid");
  CellIndex c{0, 0, 0};
  for (int j = 0; j < dim_; ++j) {
    const double v = std::floor(x(j) / h_);
    if (!(std::abs(v) < static_cast<double>(kBias - 1))) throw Error(ErrorCode::NumericRange, "point outside grid range");
    c[j] = static_cast<int>(v);
  }
  return c;
}

Vec GridRegion::cell_lo(const CellIndex& c) const {
  Vec v(dim_);
  for (int j = 0; j < dim_; ++j) v(j) = c[j] * h_;
  return v;
}

Vec GridRegion::cell_center(const CellIndex& c) const { return cell_lo(c).array() + 0.5 * h_; }

std::vector<Vec> GridRegion::cell_corners(const CellIndex& c) const {
  std::vector<Vec> out;
  const Vec lo = cell_lo(c);
  for (int mask = 0; mask < (1 << dim_); ++mask) {
    Vec v = lo;
    for (int j = 0; j < dim_; ++j) {
      if (mask & (1 << j)) v(j) += h_;
    }
    out.push_back(v);
  }
  return out;
}

std::int64_t GridRegion::pack(const CellIndex& c) const {
  std::int64_t key = 0;
  for (int j = 0; j < 3; ++j) {
    const std::int64_t v = static_cast<std::int64_t>(c[j]) + kBias;
    if (v < 0 || v > kMask) throw Error(ErrorCode::NumericRange, "cell index outside grid range");
    key = (key << kBits) | v;
  }
  return key;
}

CellIndex GridRegion::unpack(std::int64_t key) const {
  CellIndex c{};
  for (int j = 2; j >= 0; --j) {
    c[j] = static_cast<int>((key & kMask) - kBias);
    key >>= kBits;
  }
  return c;
}

void GridRegion::mark(const CellIndex& c) { cells_.insert(pack(c)); }
void GridRegion::mark_point(const Vec& x) { mark(cell_of(x)); }
void GridRegion::erase(const CellIndex& c) { cells_.erase(pack(c)); }
bool GridRegion::has(const CellIndex& c) const { return cells_.count(pack(c)) != 0; }

void GridRegion::mark_segment(const Vec& a, const Vec& b) {
  if (!a.allFinite() || !b.allFinite()) throw Error(ErrorCode::NonFiniteState, "segment endpoint is not finite");
  const Vec lo = a.cwiseMin(b);
  const Vec hi = a.cwiseMax(b);
  // cells whose closed box may touch: one extra layer for points on cell faces
  CellIndex clo = cell_of(lo), chi = cell_of(hi);
  for (int j = 0; j < dim_; ++j) {
    if (lo(j) == clo[j] * h_) --clo[j];
  }
  for_each_cell_in(clo, chi, dim_, [&](const CellIndex& c) {
    const Vec cl = cell_lo(c);
    const Vec ch = cl.array() + h_;
    if (segment_meets_box(a, b, cl, ch)) mark(c);
  });
}

void GridRegion::mark_box(const Vec& lo, const Vec& hi) {
  CellIndex clo = cell_of(lo), chi = cell_of(hi);
  for (int j = 0; j < dim_; ++j) {
    if (lo(j) == clo[j] * h_) --clo[j];
  }
  for_each_cell_in(clo, chi, dim_, [&](const CellIndex& c) { mark(c); });
}

std::vector<CellIndex> GridRegion::cells() const {
  std::vector<CellIndex> out;
  out.reserve(cells_.size());
  for (auto k : cells_) out.push_back(unpack(k));
  return out;
}

std::pair<Vec, Vec> GridRegion::bounds() const {
  if (cells_.empty()) throw Error(ErrorCode::EmptyBoundary, "grid region is empty");
  Vec lo = Vec::Constant(dim_, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  for (const auto& c : cells()) {
    const Vec l = cell_lo(c);
    lo = lo.cwiseMin(l);
    hi = hi.cwiseMax(Vec(l.array() + h_));
  }
  return {lo, hi};
}

void GridRegion::check_compatible(const GridRegion& other) const {
  if (other.dim_ != dim_ || other.h_ != h_) throw Error(ErrorCode::DimMismatch, "grid regions differ in dimension or cell size");
}

void GridRegion::unite(const GridRegion& other) {
  check_compatible(other);
  cells_.insert(other.cells_.begin(), other.cells_.end());
}

GridRegion GridRegion::intersection(const GridRegion& other) const {
  check_compatible(other);
  GridRegion out(dim_, h_, mode_);
  std::set_intersection(cells_.begin(), cells_.end(), other.cells_.begin(), other.cells_.end(),
                        std::inserter(out.cells_, out.cells_.end()));
  return out;
}

GridRegion GridRegion::difference(const GridRegion& other) const {
  check_compatible(other);
  GridRegion out(dim_, h_, mode_);
  std::set_difference(cells_.begin(), cells_.end(), other.cells_.begin(), other.cells_.end(),
                      std::inserter(out.cells_, out.cells_.end()));
  return out;
}

bool GridRegion::subset_of(const GridRegion& other) const {
  check_compatible(other);
  return std::includes(other.cells_.begin(), other.cells_.end(), cells_.begin(), cells_.end());
}

namespace {

// Distance from cell c of a to the nearest cell of b, searched in growing shells.
double nearest(const GridRegion& b, const CellIndex& c, int dim, int max_radius) {
  if (b.has(c)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 1; r <= max_radius; ++r) {
    CellIndex lo = c, hi = c;
    for (int j = 0; j < dim; ++j) {
      lo[j] -= r;
      hi[j] += r;
    }
    for_each_cell_in(lo, hi, dim, [&](const CellIndex& d) {
      int cheb = 0;
      for (int j = 0; j < dim; ++j) cheb = std::max(cheb, std::abs(d[j] - c[j]));
      if (cheb != r || !b.has(d)) return;
      double s = 0.0;
      for (int j = 0; j < dim; ++j) s += double(d[j] - c[j]) * double(d[j] - c[j]);
      best = std::min(best, std::sqrt(s) * b.cell_size());
    });
    // any cell in a farther shell is at least r * h away
    if (best <= r * b.cell_size()) return best;
  }
  return best;
}

}  // namespace

double hausdorff(const GridRegion& a, const GridRegion& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  const int max_radius = 200;
  double gap = 0.0;
  for (const auto& c : a.difference(b).cells()) gap = std::max(gap, nearest(b, c, a.dim(), max_radius));
  for (const auto& c : b.difference(a).cells()) gap = std::max(gap, nearest(a, c, a.dim(), max_radius));
  return gap;
}

std::size_t symmetric_difference_count(const GridRegion& a, const GridRegion& b) {
  return a.difference(b).size() + b.difference(a).size();
}

bool cell_inside(const GridRegion& grid, const CellIndex& c, const Polyhedron& P, double tol) {
  for (const auto& x : grid.cell_corners(c)) {
    if (!P.contains(x, tol)) return false;
  }
  return true;
}

bool cell_meets(const GridRegion& grid, const CellIndex& c, const Polyhedron& P) {
  if (cell_inside(grid, c, P)) return true;
  const double h = grid.cell_size();
  const Vec center = grid.cell_center(c);
  if (P.contains(center, 0.0)) return true;
  const double half_diag = 0.5 * h * std::sqrt(static_cast<double>(P.dim()));
  for (const auto& row : P.inequalities()) {
    if (row.eval(center) > half_diag * row.normal.norm() + 1e-12) return false;
  }
  for (const auto& row : P.equalities()) {
    if (std::abs(row.eval(center)) > half_diag * row.normal.norm() + 1e-12) return false;
  }
  Polyhedron cell = P;
  const Vec cl = grid.cell_lo(c);
  for (int j = 0; j < P.dim(); ++j) {
    cell.add_inequality(Halfspace(Vec::Unit(P.dim(), j), cl(j) + h));
    cell.add_inequality(Halfspace(-Vec::Unit(P.dim(), j), -cl(j)));
  }
  return !is_empty(cell);
}

GridRegion rasterize_polyhedron(const Polyhedron& P, double h, GridMode mode, const Vec& lo, const Vec& hi) {
  GridRegion out(P.dim(), h, mode);
  GridRegion probe(P.dim(), h);
  probe.mark_box(lo, hi);
  for (const auto& c : probe.cells()) {
    if (mode == GridMode::Under ? cell_inside(out, c, P) : cell_meets(out, c, P)) out.mark(c);
  }
  return out;
}

}  // namespace reachkit
