#include "reachkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reachkit/flow.hpp"

namespace reachkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InfeasibleFace: return "InfeasibleFace";
    case ErrorCode::DegenerateNormal: return "DegenerateNormal";
    case ErrorCode::NumericRange: return "NumericRange";
    case ErrorCode::EmptyPolyhedron: return "EmptyPolyhedron";
    case ErrorCode::Unbounded2D: return "Unbounded2D";
    case ErrorCode::Empty2D: return "Empty2D";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::DimUnsupported: return "DimUnsupported";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::UnboundedFace: return "UnboundedFace";
    case ErrorCode::EmptyBoundary: return "EmptyBoundary";
    case ErrorCode::StepTooCoarse: return "StepTooCoarse";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::AssumptionA2Violated: return "AssumptionA2Violated";
    case ErrorCode::BadDeltaOrder: return "BadDeltaOrder";
    case ErrorCode::DenominatorAllDegenerate: return "DenominatorAllDegenerate";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Model: return "Model";
  }
  return "Unknown";
}

namespace {

// Unit-norm test loose enough to make normalization idempotent bit for bit.
bool is_unit(const Vec& v) { return std::abs(v.squaredNorm() - 1.0) <= 4e-15; }

bool same_row(const Halfspace& a, const Halfspace& b) {
  const Halfspace na = a.normalized();
  const Halfspace nb = b.normalized();
  return (na.normal - nb.normal).cwiseAbs().maxCoeff() <= kGeomTol && std::abs(na.offset - nb.offset) <= kGeomTol;
}

void check_dim(int expected, const Halfspace& h) {
  if (h.dim() != expected) {
    throw Error(ErrorCode::DimMismatch,
                "row has length " + std::to_string(h.dim()) + ", polyhedron dimension is " + std::to_string(expected));
  }
}

}  // namespace

Halfspace Halfspace::normalized() const {
  if (is_unit(normal)) return *this;
  const double n = normal.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::DegenerateNormal, "halfspace normal is zero");
  return Halfspace(normal / n, offset / n);
}

Polyhedron::Polyhedron(int dim, std::vector<Halfspace> inequalities, std::vector<Halfspace> equalities)
    : dim_(dim), inequalities_(std::move(inequalities)), equalities_(std::move(equalities)) {
  for (const auto& h : inequalities_) check_dim(dim_, h);
  for (const auto& h : equalities_) check_dim(dim_, h);
}

Polyhedron Polyhedron::box(const Vec& lo, const Vec& hi) {
  const int n = static_cast<int>(lo.size());
  Polyhedron P(n);
  for (int j = 0; j < n; ++j) {
    P.add_inequality(Halfspace(Vec::Unit(n, j), hi(j)));
    P.add_inequality(Halfspace(-Vec::Unit(n, j), -lo(j)));
  }
  return P;
}

void Polyhedron::add_inequality(Halfspace h) {
  check_dim(dim_, h);
  inequalities_.push_back(std::move(h));
}

void Polyhedron::add_equality(Halfspace h) {
  check_dim(dim_, h);
  equalities_.push_back(std::move(h));
}

bool Polyhedron::contains(const Vec& x, double tol) const {
  for (const auto& h : inequalities_) {
    if (h.eval(x) > tol) return false;
  }
  for (const auto& h : equalities_) {
    if (std::abs(h.eval(x)) > tol) return false;
  }
  return true;
}

double Polyhedron::max_violation(const Vec& x) const {
  double v = 0.0;
  for (const auto& h : inequalities_) v = std::max(v, h.eval(x));
  for (const auto& h : equalities_) v = std::max(v, std::abs(h.eval(x)));
  return v;
}

Mat Polyhedron::le_matrix() const {
  Mat M(static_cast<Eigen::Index>(inequalities_.size()), dim_);
  for (size_t i = 0; i < inequalities_.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = inequalities_[i].normal.transpose();
  return M;
}

Vec Polyhedron::le_rhs() const {
  Vec b(static_cast<Eigen::Index>(inequalities_.size()));
  for (size_t i = 0; i < inequalities_.size(); ++i) b(static_cast<Eigen::Index>(i)) = inequalities_[i].offset;
  return b;
}

Mat Polyhedron::eq_matrix() const {
  Mat M(static_cast<Eigen::Index>(equalities_.size()), dim_);
  for (size_t i = 0; i < equalities_.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = equalities_[i].normal.transpose();
  return M;
}

Vec Polyhedron::eq_rhs() const {
  Vec b(static_cast<Eigen::Index>(equalities_.size()));
  for (size_t i = 0; i < equalities_.size(); ++i) b(static_cast<Eigen::Index>(i)) = equalities_[i].offset;
  return b;
}

lp::Result Polyhedron::maximize(const Vec& c) const {
  return lp::maximize(c, le_matrix(), le_rhs(), eq_matrix(), eq_rhs());
}

Polyhedron Face::as_polyhedron() const {
  Polyhedron P(dim());
  for (int i = 0; i < side_count(); ++i) P.add_inequality(Halfspace(side_normals[i], side_offsets[i]));
  P.add_equality(Halfspace(base_normal, base_offset));
  return P;
}

namespace {

// Removes the base-normal component of each side row (using that base^T x = base_offset
// on the face), then renormalizes. Vacuous rows are dropped.
Face orthogonalize_against(const std::vector<Vec>& normals, const std::vector<double>& offsets, const Vec& base,
                           double base_offset) {
  Face out;
  out.base_normal = base;
  out.base_offset = base_offset;
  out.orthonormalized = true;
  for (size_t i = 0; i < normals.size(); ++i) {
    Vec r = normals[i];
    double off = offsets[i];
    const double c = r.dot(base);
    if (std::abs(c) > 1e-15) {
      r -= c * base;
      off -= c * base_offset;
    }
    const double nr = r.norm();
    if (nr <= 1e-12 * std::max(1.0, normals[i].norm())) {
      // Row reduces to 0 <= off on the base hyperplane.
      if (off < -kGeomTol) throw Error(ErrorCode::DegenerateNormal, "side row projects to zero and empties the face");
      continue;
    }
    Halfspace h(r, off);
    h = h.normalized();
    bool dup = false;
    for (size_t j = 0; j < out.side_normals.size(); ++j) {
      if (same_row(h, Halfspace(out.side_normals[j], out.side_offsets[j]))) {
        dup = true;
        break;
      }
    }
    if (dup) continue;
    out.side_normals.push_back(h.normal);
    out.side_offsets.push_back(h.offset);
  }
  return out;
}

}  // namespace

Face normalize_and_orthogonalize(const Face& raw) {
  if (raw.side_normals.size() != raw.side_offsets.size()) throw Error(ErrorCode::DimMismatch, "side normals/offsets differ in count");
  for (const auto& a : raw.side_normals) {
    if (a.size() != raw.base_normal.size()) throw Error(ErrorCode::DimMismatch, "side normal length differs from base");
  }
  const Halfspace base = Halfspace(raw.base_normal, raw.base_offset).normalized();
  Face out = orthogonalize_against(raw.side_normals, raw.side_offsets, base.normal, base.offset);
  if (is_empty(out.as_polyhedron())) throw Error(ErrorCode::InfeasibleFace, "face constraint system is empty");
  return out;
}

Face propagate_face(const Face& face_in, const Mat& A, double delta) {
  if (delta < 0.0) throw Error(ErrorCode::PreconditionViolated, "propagation time must be nonnegative");
  const Face face = face_in.orthonormalized ? face_in : normalize_and_orthogonalize(face_in);
  const Mat M = flow::expm(-A.transpose(), delta);

  const Vec ak = M * face.base_normal;
  const double nk = ak.norm();
  if (!(nk > 0.0) || !std::isfinite(nk)) throw Error(ErrorCode::NumericRange, "transported base normal degenerated");
  Vec bk = ak / nk;
  double bk_off = face.base_offset / nk;
  if (is_unit(face.base_normal) && (bk - face.base_normal).cwiseAbs().maxCoeff() == 0.0) {
    bk = face.base_normal;
    bk_off = face.base_offset;
  }

  std::vector<Vec> normals;
  normals.reserve(face.side_normals.size());
  for (const auto& a : face.side_normals) normals.push_back(M * a);
  Face out = orthogonalize_against(normals, face.side_offsets, bk, bk_off);
  for (const auto& n : out.side_normals) {
    if (!n.allFinite()) throw Error(ErrorCode::NumericRange, "transported face is not finite");
  }
  return out;
}

Boundedness boundedness(const Polyhedron& P) {
  if (is_empty(P)) return Boundedness::Empty;
  for (int j = 0; j < P.dim(); ++j) {
    for (double sign : {1.0, -1.0}) {
      if (P.maximize(sign * Vec::Unit(P.dim(), j)).status == lp::Status::Unbounded) return Boundedness::Unbounded;
    }
  }
  return Boundedness::Bounded;
}

bool is_bounded(const Polyhedron& P) { return boundedness(P) != Boundedness::Unbounded; }

bool is_empty(const Polyhedron& P) {
  if (P.dim() < 1) throw Error(ErrorCode::DimMismatch, "polyhedron dimension must be positive");
  return P.maximize(Vec::Zero(P.dim())).status == lp::Status::Infeasible;
}

std::vector<Vec> vertices_2d(const Polyhedron& P) {
  if (P.dim() != 2) throw Error(ErrorCode::DimUnsupported, "vertex enumeration is 2D only");
  switch (boundedness(P)) {
    case Boundedness::Empty: throw Error(ErrorCode::Empty2D, "polygon is empty");
    case Boundedness::Unbounded: throw Error(ErrorCode::Unbounded2D, "polygon is unbounded");
    case Boundedness::Bounded: break;
  }

  std::vector<Halfspace> lines;
  for (const auto& h : P.inequalities()) lines.push_back(h.normalized());
  for (const auto& h : P.equalities()) lines.push_back(h.normalized());
  Polyhedron unit_rows(2);
  for (const auto& h : P.inequalities()) unit_rows.add_inequality(h.normalized());
  for (const auto& h : P.equalities()) unit_rows.add_equality(h.normalized());

  std::vector<Vec> pts;
  for (size_t i = 0; i < lines.size(); ++i) {
    for (size_t j = i + 1; j < lines.size(); ++j) {
      Eigen::Matrix2d M;
      M.row(0) = lines[i].normal.transpose();
      M.row(1) = lines[j].normal.transpose();
      if (std::abs(M.determinant()) <= 1e-12) continue;
      const Vec x = M.partialPivLu().solve(Eigen::Vector2d(lines[i].offset, lines[j].offset));
      if (unit_rows.max_violation(x) > kGeomTol * (1.0 + x.norm())) continue;
      bool dup = false;
      for (const auto& p : pts) {
        if ((p - x).norm() <= kGeomTol * (1.0 + x.norm())) {
          dup = true;
          break;
        }
      }
      if (!dup) pts.push_back(x);
    }
  }
  if (pts.empty()) throw Error(ErrorCode::Empty2D, "no vertices found");
  if (pts.size() <= 2) return pts;

  Vec centroid = Vec::Zero(2);
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  std::vector<std::pair<double, size_t>> order;
  for (size_t i = 0; i < pts.size(); ++i) {
    order.emplace_back(std::atan2(pts[i](1) - centroid(1), pts[i](0) - centroid(0)), i);
  }
  std::sort(order.begin(), order.end());
  std::vector<Vec> out;
  for (const auto& [angle, idx] : order) {
    if (!out.empty() && (out.back() - pts[idx]).norm() <= kGeomTol) continue;
    out.push_back(pts[idx]);
  }
  if (out.size() > 1 && (out.front() - out.back()).norm() <= kGeomTol) out.pop_back();
  return out;
}

double area_2d(const Polyhedron& P) {
  const auto v = vertices_2d(P);
  if (v.size() < 3) return 0.0;
  double a = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    const Vec& p = v[i];
    const Vec& q = v[(i + 1) % v.size()];
    a += p(0) * q(1) - q(0) * p(1);
  }
  return 0.5 * std::abs(a);
}

Hull2D convex_hull_2d(const std::vector<Vec>& points) {
  if (points.size() < 3) throw Error(ErrorCode::TooFewPoints, "convex hull needs at least 3 points");
  for (const auto& p : points) {
    if (p.size() != 2) throw Error(ErrorCode::DimUnsupported, "convex_hull_2d takes 2D points");
  }
  std::vector<Vec> pts = points;
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
    return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
  };
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = 1e-12 * std::max(1.0, scale * scale);

  // Andrew's monotone chain; collinear points are dropped.
  std::vector<Vec> hull(2 * pts.size());
  size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= eps) --k;
    hull[k++] = p;
  }
  for (size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= eps) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : k);

  Hull2D out;
  out.polygon = Polyhedron(2);
  if (hull.size() < 3) {
    // Collinear input: the segment, as a strip capped at both ends.
    const Vec a = pts.front();
    const Vec b = pts.back();
    const Vec d = b - a;
    if (d.norm() == 0.0) throw Error(ErrorCode::TooFewPoints, "all points coincide");
    const Vec n = Eigen::Vector2d(d(1), -d(0)).normalized();
    out.polygon.add_inequality(Halfspace(n, n.dot(a)));
    out.polygon.add_inequality(Halfspace(-n, -n.dot(a)));
    const Vec u = d.normalized();
    out.polygon.add_inequality(Halfspace(u, u.dot(b)));
    out.polygon.add_inequality(Halfspace(-u, -u.dot(a)));
    out.vertices = {a, b};
    out.degenerate = true;
    return out;
  }
  out.vertices = hull;
  for (size_t i = 0; i < hull.size(); ++i) {
    const Vec& p = hull[i];
    const Vec& q = hull[(i + 1) % hull.size()];
    const Vec d = q - p;
    const Vec n = Eigen::Vector2d(d(1), -d(0)).normalized();
    out.polygon.add_inequality(Halfspace(n, n.dot(p)));
  }
  return out;
}

Polyhedron intersect(const std::vector<Polyhedron>& parts) {
  if (parts.empty()) throw Error(ErrorCode::DimMismatch, "intersect needs at least one polyhedron");
  const int dim = parts.front().dim();
  Polyhedron out(dim);
  for (const auto& P : parts) {
    if (P.dim() != dim) throw Error(ErrorCode::DimMismatch, "intersect operands differ in dimension");
    for (const auto& h : P.inequalities()) {
      const bool dup = std::any_of(out.inequalities().begin(), out.inequalities().end(),
                                   [&](const Halfspace& g) { return same_row(g, h); });
      if (!dup) out.add_inequality(h);
    }
    for (const auto& h : P.equalities()) {
      const bool dup = std::any_of(out.equalities().begin(), out.equalities().end(),
                                   [&](const Halfspace& g) { return same_row(g, h); });
      if (!dup) out.add_equality(h);
    }
  }
  return out;
}

}  // namespace reachkit
