#include "reachkit/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace reachkit {

InitialSet InitialSet::level_set(Expr ell, int dim, Vec lo, Vec hi) {
  if (lo.size() != dim || hi.size() != dim) throw Error(ErrorCode::DimMismatch, "sampling box dimension mismatch");
  if ((hi - lo).minCoeff() <= 0.0) throw Error(ErrorCode::PreconditionViolated, "sampling box is empty");
  LevelSet ls{ell, gradient(ell, dim), std::move(lo), std::move(hi)};
  return InitialSet(std::move(ls));
}

InitialSet InitialSet::polyhedron(Polyhedron P) {
  if (is_empty(P)) throw Error(ErrorCode::EmptyPolyhedron, "initial polyhedron is empty");
  return InitialSet(std::move(P));
}

InitialSet InitialSet::cells(GridRegion region) {
  if (region.empty()) throw Error(ErrorCode::EmptyBoundary, "initial cell region is empty");
  return InitialSet(std::move(region));
}

int InitialSet::dim() const {
  if (is_level_set()) return static_cast<int>(as_level_set().lo.size());
  if (is_polyhedron()) return as_polyhedron().dim();
  return as_cells().dim();
}

bool InitialSet::contains(const Vec& x, double tol) const {
  if (is_level_set()) return as_level_set().ell.eval(x) <= tol;
  if (is_polyhedron()) return as_polyhedron().contains(x, tol);
  const GridRegion& g = as_cells();
  if (g.contains(x)) return true;
  if (tol <= 0.0) return false;
  for (int j = 0; j < g.dim(); ++j) {
    for (double s : {-tol, tol}) {
      Vec y = x;
      y(j) += s;
      if (g.contains(y)) return true;
    }
  }
  return false;
}

std::pair<Vec, Vec> InitialSet::bounding_box() const {
  if (is_level_set()) return {as_level_set().lo, as_level_set().hi};
  if (is_cells()) return as_cells().bounds();
  const Polyhedron& P = as_polyhedron();
  Vec lo(P.dim()), hi(P.dim());
  for (int j = 0; j < P.dim(); ++j) {
    const auto up = P.maximize(Vec::Unit(P.dim(), j));
    const auto dn = P.maximize(-Vec::Unit(P.dim(), j));
    if (up.status != lp::Status::Optimal || dn.status != lp::Status::Optimal) {
      throw Error(ErrorCode::PreconditionViolated, "initial polyhedron must be bounded");
    }
    hi(j) = up.value;
    lo(j) = -dn.value;
  }
  return {lo, hi};
}

GridRegion InitialSet::rasterize(double h, GridMode mode) const {
  if (is_cells()) {
    if (as_cells().cell_size() != h) throw Error(ErrorCode::PreconditionViolated, "cell size differs from the region's");
    GridRegion g = as_cells();
    g.set_mode(mode);
    return g;
  }
  auto [lo, hi] = bounding_box();
  lo.array() -= h;
  hi.array() += h;
  if (is_polyhedron()) return rasterize_polyhedron(as_polyhedron(), h, mode, lo, hi);
  const LevelSet& ls = as_level_set();
  GridRegion out(dim(), h, mode);
  GridRegion probe(dim(), h);
  probe.mark_box(ls.lo, ls.hi);
  for (const auto& c : probe.cells()) {
    const auto corners = out.cell_corners(c);
    if (mode == GridMode::Under) {
      bool all = true;
      for (const auto& x : corners) all = all && ls.ell.eval(x) < 0.0;
      if (all && ls.ell.eval(out.cell_center(c)) < 0.0) out.mark(c);
    } else {
      bool any = ls.ell.eval(out.cell_center(c)) <= 0.0;
      for (const auto& x : corners) any = any || ls.ell.eval(x) <= 0.0;
      if (any) out.mark(c);
    }
  }
  return out;
}

std::vector<int> BoundaryFront::s1_plus() const {
  std::vector<int> out;
  for (size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] != FlowTag::Inflow) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> BoundaryFront::outflow() const {
  std::vector<int> out;
  for (size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == FlowTag::Outflow) out.push_back(static_cast<int>(i));
  }
  return out;
}

double tangential_tol(const Vec& f) { return 1e-9 * (1.0 + f.norm()); }

namespace {

// Collects samples, merging coincident ones and keeping every outward normal seen.
class SampleSet {
 public:
  explicit SampleSet(double quantum) : quantum_(quantum) {}

  int add(const Vec& x, const Vec& normal) {
    std::array<long long, 3> key{0, 0, 0};
    for (Eigen::Index j = 0; j < x.size(); ++j) key[j] = std::llround(x(j) / quantum_);
    auto it = index_.find(key);
    if (it == index_.end()) {
      it = index_.emplace(key, static_cast<int>(points.size())).first;
      points.push_back(x);
      normals.emplace_back();
    }
    normals[it->second].push_back(normal);
    return it->second;
  }

  void link(int a, int b) {
    if (a == b) return;
    links.emplace_back(std::min(a, b), std::max(a, b));
  }

  std::vector<Vec> points;
  std::vector<std::vector<Vec>> normals;
  std::vector<std::pair<int, int>> links;

 private:
  double quantum_;
  std::map<std::array<long long, 3>, int> index_;
};

// Orthonormal basis of the hyperplane orthogonal to unit n.
Mat plane_basis(const Vec& n) {
  const Eigen::Index d = n.size();
  Eigen::HouseholderQR<Mat> qr(n);
  const Mat Q = qr.householderQ() * Mat::Identity(d, d);
  return Q.rightCols(d - 1);
}

void sample_polygon(const Polyhedron& P, double spacing, SampleSet& out) {
  const auto verts = vertices_2d(P);
  std::vector<Halfspace> rows;
  for (const auto& r : P.inequalities()) rows.push_back(r.normalized());
  for (const auto& r : P.equalities()) {
    rows.push_back(r.normalized());
    rows.push_back(Halfspace(-r.normal, -r.offset).normalized());
  }
  const auto active = [&](const Vec& x) {
    std::vector<Vec> ns;
    for (const auto& r : rows) {
      if (std::abs(r.eval(x)) <= 1e-9 * (1.0 + x.norm())) ns.push_back(r.normal);
    }
    return ns;
  };
  const auto add = [&](const Vec& x) {
    int idx = -1;
    for (const auto& n : active(x)) idx = out.add(x, n);
    return idx;
  };
  if (verts.size() == 1) {
    add(verts[0]);
    return;
  }
  int first = -1, prev = -1;
  for (size_t i = 0; i < verts.size(); ++i) {
    const Vec& a = verts[i];
    const Vec& b = verts[(i + 1) % verts.size()];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / spacing - 1e-9)));
    for (int s = 0; s < n; ++s) {
      const int idx = add(a + (b - a) * (double(s) / n));
      if (idx < 0) continue;
      if (first < 0) first = idx;
      if (prev >= 0) out.link(prev, idx);
      prev = idx;
    }
    if (verts.size() == 2) {
      // a segment: walk back along the same edge once
      const int idx = add(b);
      if (prev >= 0 && idx >= 0) out.link(prev, idx);
      return;
    }
  }
  if (prev >= 0 && first >= 0) out.link(prev, first);
}

void sample_polyhedron_nd(const Polyhedron& P, double spacing, SampleSet& out) {
  const int d = P.dim();
  for (const auto& raw : P.inequalities()) {
    const Halfspace row = raw.normalized();
    Polyhedron face = P;
    face.add_equality(row);
    if (is_empty(face)) continue;
    const Vec p0 = row.normal * row.offset;
    const Mat B = plane_basis(row.normal);
    std::vector<double> lo(d - 1), hi(d - 1);
    for (int j = 0; j < d - 1; ++j) {
      hi[j] = face.maximize(B.col(j)).value - B.col(j).dot(p0);
      lo[j] = -face.maximize(-B.col(j)).value - B.col(j).dot(p0);
    }
    std::vector<int> n(d - 1), c(d - 1, 0);
    for (int j = 0; j < d - 1; ++j) n[j] = std::max(1, static_cast<int>(std::ceil((hi[j] - lo[j]) / spacing - 1e-9)));
    while (true) {
      Vec x = p0;
      for (int j = 0; j < d - 1; ++j) x += B.col(j) * (lo[j] + (hi[j] - lo[j]) * c[j] / n[j]);
      if (P.contains(x, 1e-9)) {
        for (const auto& r : P.inequalities()) {
          const Halfspace u = r.normalized();
          if (std::abs(u.eval(x)) <= 1e-9 * (1.0 + x.norm())) out.add(x, u.normal);
        }
      }
      int j = 0;
      for (; j < d - 1; ++j) {
        if (c[j] < n[j]) {
          ++c[j];
          break;
        }
        c[j] = 0;
      }
      if (j == d - 1) break;
    }
  }
}

void sample_cells(const GridRegion& g, double spacing, SampleSet& out) {
  const int d = g.dim();
  const double h = g.cell_size();
  const int n = std::max(1, static_cast<int>(std::ceil(h / spacing - 1e-9)));
  for (const auto& c : g.cells()) {
    for (int j = 0; j < d; ++j) {
      for (int side : {-1, 1}) {
        CellIndex nb = c;
        nb[j] += side;
        if (g.has(nb)) continue;
        const Vec normal = side * Vec::Unit(d, j);
        Vec base = g.cell_lo(c);
        if (side > 0) base(j) += h;
        // lattice over the facet's free axes
        std::vector<int> axes;
        for (int a = 0; a < d; ++a) {
          if (a != j) axes.push_back(a);
        }
        std::vector<int> k(axes.size(), 0);
        int prev = -1;
        while (true) {
          Vec x = base;
          for (size_t a = 0; a < axes.size(); ++a) x(axes[a]) += h * k[a] / n;
          const int idx = out.add(x, normal);
          if (d == 2) {
            if (prev >= 0) out.link(prev, idx);
            prev = idx;
          }
          size_t a = 0;
          for (; a < axes.size(); ++a) {
            if (k[a] < n) {
              ++k[a];
              break;
            }
            k[a] = 0;
          }
          if (a == axes.size()) break;
        }
      }
    }
  }
}

void sample_level_set(const LevelSet& ls, double spacing, SampleSet& out, int& dropped) {
  const int d = static_cast<int>(ls.lo.size());
  std::vector<int> n(d);
  std::vector<long long> stride(d);
  long long total = 1;
  for (int j = 0; j < d; ++j) {
    n[j] = std::max(1, static_cast<int>(std::ceil((ls.hi(j) - ls.lo(j)) / spacing - 1e-9)));
    stride[j] = total;
    total *= n[j] + 1;
  }
  const auto position = [&](long long id) {
    Vec x(d);
    for (int j = 0; j < d; ++j) {
      const long long c = (id / stride[j]) % (n[j] + 1);
      x(j) = ls.lo(j) + (ls.hi(j) - ls.lo(j)) * double(c) / n[j];
    }
    return x;
  };
  std::vector<double> val(static_cast<size_t>(total));
  for (long long id = 0; id < total; ++id) val[id] = ls.ell.eval(position(id));

  // crossing sample for each lattice edge (id, axis) with a sign change
  std::map<std::pair<long long, int>, int> crossing;
  const auto edge_point = [&](long long id, int axis) -> int {
    const auto key = std::make_pair(id, axis);
    if (auto it = crossing.find(key); it != crossing.end()) return it->second;
    int result = -1;
    const long long other = id + stride[axis];
    const bool in_a = val[id] <= 0.0, in_b = val[other] <= 0.0;
    if (in_a != in_b) {
      Vec a = position(id), b = position(other);
      if (!in_a) std::swap(a, b);  // a inside, b outside
      for (int it = 0; it < 80; ++it) {
        const Vec m = 0.5 * (a + b);
        (ls.ell.eval(m) <= 0.0 ? a : b) = m;
      }
      const Vec x = a;
      Vec g(d);
      for (int j = 0; j < d; ++j) g(j) = ls.grad[j].eval(x);
      if (!g.allFinite() || g.norm() == 0.0) {
        ++dropped;
      } else {
        result = out.add(x, g);
      }
    }
    crossing.emplace(key, result);
    return result;
  };

  for (long long id = 0; id < total; ++id) {
    for (int j = 0; j < d; ++j) {
      const long long c = (id / stride[j]) % (n[j] + 1);
      if (c < n[j]) (void)edge_point(id, j);
    }
  }
  if (d != 2) return;
  // marching squares links
  for (long long id = 0; id < total; ++id) {
    const long long cx = id % (n[0] + 1), cy = (id / stride[1]) % (n[1] + 1);
    if (cx >= n[0] || cy >= n[1]) continue;
    std::vector<int> pts;
    for (const auto& [base, axis] : {std::make_pair(id, 0), std::make_pair(id, 1), std::make_pair(id + stride[1], 0),
                                     std::make_pair(id + stride[0], 1)}) {
      const int p = edge_point(base, axis);
      if (p >= 0) pts.push_back(p);
    }
    for (size_t i = 0; i + 1 < pts.size(); i += 2) out.link(pts[i], pts[i + 1]);
  }
}

}  // namespace

BoundaryFront classify_boundary(const InitialSet& init, const flow::Dynamics& dyn, double spacing) {
  if (!(spacing > 0.0)) throw Error(ErrorCode::PreconditionViolated, "boundary spacing must be positive");
  if (dyn.dim() != init.dim()) throw Error(ErrorCode::DimMismatch, "dynamics and initial set dimensions differ");
  SampleSet samples(spacing * 1e-6);
  BoundaryFront front;
  front.spacing = spacing;
  if (init.is_polyhedron()) {
    if (init.dim() == 2) {
      sample_polygon(init.as_polyhedron(), spacing, samples);
    } else {
      sample_polyhedron_nd(init.as_polyhedron(), spacing, samples);
    }
  } else if (init.is_cells()) {
    sample_cells(init.as_cells(), spacing, samples);
  } else {
    sample_level_set(init.as_level_set(), spacing, samples, front.dropped);
  }
  if (samples.points.empty()) throw Error(ErrorCode::EmptyBoundary, "no boundary samples found");

  front.points = samples.points;
  for (size_t i = 0; i < samples.points.size(); ++i) {
    const Vec f = dyn.field(samples.points[i]);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& n : samples.normals[i]) best = std::max(best, n.dot(f));
    const double tol = tangential_tol(f);
    front.dots.push_back(best);
    front.tags.push_back(best > tol ? FlowTag::Outflow : (best >= -tol ? FlowTag::Tangential : FlowTag::Inflow));
  }
  std::sort(samples.links.begin(), samples.links.end());
  samples.links.erase(std::unique(samples.links.begin(), samples.links.end()), samples.links.end());
  front.links = samples.links;
  return front;
}

}  // namespace reachkit
