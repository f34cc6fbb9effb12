#include "reachkit/polyapprox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reachkit/flow.hpp"

namespace reachkit::poly {

namespace {

double row_norm(const Vec& a, const Mat& A) { return (A.transpose() * a).norm(); }

Mat plane_basis(const Vec& n) {
  const Eigen::Index d = n.size();
  Eigen::HouseholderQR<Mat> qr(n);
  const Mat Q = qr.householderQ() * Mat::Identity(d, d);
  return Q.rightCols(d - 1);
}

}  // namespace

double check_A2(const Face& face, const Mat& A) {
  const Polyhedron P = face.as_polyhedron();
  const Vec c = A.transpose() * face.base_normal;
  const auto r = P.maximize(-c);
  if (r.status == lp::Status::Infeasible) throw Error(ErrorCode::InfeasibleFace, "face is empty");
  if (r.status == lp::Status::Unbounded) throw Error(ErrorCode::UnboundedFace, "face is unbounded");
  const double delta = -r.value;
  if (!(delta > 0.0)) {
    throw Error(ErrorCode::AssumptionA2Violated,
                "outward drift assumption violated: min a_k^T A x over the face is " + std::to_string(delta));
  }
  return delta;
}

StepProblem make_problem(const Face& face, const Mat& A, double delta, std::optional<double> delta0) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw Error(ErrorCode::PreconditionViolated, "step must be positive");
  if (A.rows() != face.dim() || A.cols() != face.dim()) throw Error(ErrorCode::DimMismatch, "matrix and face dimensions differ");
  StepProblem p;
  p.face = face.orthonormalized ? face : normalize_and_orthogonalize(face);
  p.A = A;
  p.delta = delta;
  p.delta_min = check_A2(p.face, A);
  p.delta0 = delta0.value_or(p.delta_min / 2.0);
  if (!(p.delta0 > 0.0) || p.delta0 >= p.delta_min + 1e-12) {
    throw Error(ErrorCode::BadDeltaOrder, "need 0 < delta0 < delta (delta0 = " + std::to_string(p.delta0) +
                                              ", delta = " + std::to_string(p.delta_min) + ")");
  }
  const auto m = flow::max_norm_over_face(p.face);
  p.M0 = m.value;
  p.M0_bound_mode = m.bound_mode;
  p.face_delta = propagate_face(p.face, A, delta);
  return p;
}

double select_delta(double M0, double normA, double d, double d0) {
  if (!(d0 < d)) throw Error(ErrorCode::BadDeltaOrder, "delta0 must be smaller than delta");
  if (normA == 0.0 || M0 == 0.0) return std::numeric_limits<double>::infinity();
  return std::log1p((d - d0) / (M0 * normA)) / normA;
}

std::vector<Vec> sample_face(const Face& face, int count) {
  const Polyhedron P = face.as_polyhedron();
  count = std::max(count, 2);
  if (face.dim() == 2) {
    const auto v = vertices_2d(P);
    if (v.size() == 1) return {v[0]};
    std::vector<Vec> out;
    for (int i = 0; i < count; ++i) out.push_back(v[0] + (v[1] - v[0]) * (double(i) / (count - 1)));
    return out;
  }
  const int d = face.dim();
  const Vec n = face.base_normal.normalized();
  const Vec p0 = n * (face.base_offset / face.base_normal.norm());
  const Mat B = plane_basis(n);
  const int m = std::max(2, static_cast<int>(std::ceil(std::pow(double(count), 1.0 / (d - 1)))));
  std::vector<double> lo(d - 1), hi(d - 1);
  std::vector<Vec> out;
  for (int j = 0; j < d - 1; ++j) {
    const auto up = P.maximize(B.col(j));
    const auto dn = P.maximize(-B.col(j));
    if (up.status != lp::Status::Optimal || dn.status != lp::Status::Optimal) {
      throw Error(ErrorCode::UnboundedFace, "face is unbounded or empty");
    }
    hi[j] = up.value - B.col(j).dot(p0);
    lo[j] = -dn.value - B.col(j).dot(p0);
    out.push_back(up.x);
    out.push_back(dn.x);
  }
  std::vector<int> c(d - 1, 0);
  while (true) {
    Vec x = p0;
    for (int j = 0; j < d - 1; ++j) x += B.col(j) * (lo[j] + (hi[j] - lo[j]) * c[j] / (m - 1));
    if (P.contains(x, 1e-9)) out.push_back(x);
    int j = 0;
    for (; j < d - 1; ++j) {
      if (c[j] < m - 1) {
        ++c[j];
        break;
      }
      c[j] = 0;
    }
    if (j == d - 1) break;
  }
  return out;
}

C1Report check_C1(const StepProblem& prob, int nx, int nt) {
  nt = std::max(nt, 3);
  const auto xs = sample_face(prob.face, nx);
  const Vec& ak = prob.face.base_normal;
  const double bk = prob.face.base_offset;
  const Vec akA = prob.A.transpose() * ak;
  C1Report rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  rep.c2 = rep.c3 = true;
  for (int j = 0; j < nt; ++j) {
    const double t = -prob.delta + 2.0 * prob.delta * j / (nt - 1);
    const Mat E = flow::expm(prob.A, t);
    for (const auto& x0 : xs) {
      const Vec x = E * x0;
      rep.min_value = std::min(rep.min_value, akA.dot(x));
      const double s = ak.dot(x) - bk;
      if (t > 0.0 && !(s > 0.0)) rep.c2 = false;
      if (t < 0.0 && !(s < 0.0)) rep.c3 = false;
    }
  }
  rep.holds = rep.min_value >= prob.delta0 - 1e-9;
  return rep;
}

BoundSet conservative_bounds(const StepProblem& prob) {
  const int k = prob.face.side_count() + 1;
  const Mat& A = prob.A;
  const double nA = flow::operator_norm(A);
  const double growth = std::exp(nA * prob.delta);
  const Vec& ak = prob.face.base_normal;
  const Vec& bk = prob.face_delta.base_normal;
  const double delta1 = prob.delta0 / (flow::expm(A, -prob.delta).transpose() * ak).norm();
  const double trans = prob.M0 * prob.delta * growth;

  BoundSet b;
  b.k = k;
  b.mode = BoundMode::Conservative;
  b.l.assign(2 * k, 0.0);
  b.l_prime.assign(2 * k, 0.0);
  for (int i = 0; i < k - 1; ++i) {
    const Vec& ai = prob.face.side_normals[i];
    const Vec& bi = prob.face_delta.side_normals[i];
    b.l[i] = prob.M0 * row_norm(ai, A) * growth / prob.delta0;
    b.l_prime[i] = prob.M0 * row_norm(bi, A) * growth / delta1;
    b.l[k + i] = trans * row_norm(ai, A);
    b.l_prime[k + i] = trans * row_norm(bi, A);
  }
  b.l[k - 1] = trans * row_norm(ak, A);
  b.l_prime[k - 1] = trans * row_norm(bk, A);
  b.l[2 * k - 1] = b.l[k - 1];
  b.l_prime[2 * k - 1] = b.l_prime[k - 1];
  return b;
}

BoundSet sampled_bounds(const StepProblem& prob, int nx, int nt) {
  if (nx < 2 || nt < 2) throw Error(ErrorCode::PreconditionViolated, "lattice needs at least 2 points per axis");
  const int k = prob.face.side_count() + 1;
  const Face& F = prob.face;
  const Face& G = prob.face_delta;
  const auto xs = sample_face(F, nx);
  BoundSet b;
  b.k = k;
  b.mode = BoundMode::Sampled;
  const double neg = -std::numeric_limits<double>::infinity();
  b.l.assign(2 * k, 0.0);
  b.l_prime.assign(2 * k, 0.0);
  std::vector<double> rot(k - 1, neg), rot_p(k - 1, neg);
  bool any_lower = false, any_upper = false;
  for (int j = 1; j <= nt; ++j) {
    const Mat E = flow::expm(prob.A, prob.delta * j / nt);
    for (const auto& x0 : xs) {
      const Vec x = E * x0;
      const double lower = F.base_normal.dot(x) - F.base_offset;
      const double upper = G.base_offset - G.base_normal.dot(x);
      for (int i = 0; i < k - 1; ++i) {
        const double si = F.side_normals[i].dot(x) - F.side_offsets[i];
        const double ti = G.side_normals[i].dot(x) - G.side_offsets[i];
        if (lower > 1e-12) rot[i] = std::max(rot[i], si / lower);
        if (upper > 1e-12) rot_p[i] = std::max(rot_p[i], ti / upper);
        b.l[k + i] = std::max(b.l[k + i], si);
        b.l_prime[k + i] = std::max(b.l_prime[k + i], ti);
      }
      any_lower = any_lower || lower > 1e-12;
      any_upper = any_upper || upper > 1e-12;
      b.l[k - 1] = std::max(b.l[k - 1], lower);
      b.l_prime[k - 1] = std::max(b.l_prime[k - 1], upper);
    }
  }
  // t = 0 rows of the lattice feed the upper ratios too
  for (const auto& x : xs) {
    const double upper = G.base_offset - G.base_normal.dot(x);
    for (int i = 0; i < k - 1; ++i) {
      const double ti = G.side_normals[i].dot(x) - G.side_offsets[i];
      if (upper > 1e-12) rot_p[i] = std::max(rot_p[i], ti / upper);
      b.l_prime[k + i] = std::max(b.l_prime[k + i], ti);
    }
    any_upper = any_upper || upper > 1e-12;
    b.l_prime[k - 1] = std::max(b.l_prime[k - 1], upper);
  }
  if (k > 1 && (!any_lower || !any_upper)) {
    throw Error(ErrorCode::DenominatorAllDegenerate, "step too small for the sampling lattice");
  }
  for (int i = 0; i < k - 1; ++i) {
    b.l[i] = rot[i];
    b.l_prime[i] = rot_p[i];
  }
  b.l[2 * k - 1] = b.l[k - 1];
  b.l_prime[2 * k - 1] = b.l_prime[k - 1];
  return b;
}

std::string to_string(RowGroup g) {
  switch (g) {
    case RowGroup::RotatedLower: return "rotated-lower";
    case RowGroup::BottomSupport: return "bottom-support";
    case RowGroup::Cap: return "cap";
    case RowGroup::Slab: return "slab";
    case RowGroup::RotatedUpper: return "rotated-upper";
    case RowGroup::TopSupport: return "top-support";
    case RowGroup::CapPrime: return "cap-upper";
    case RowGroup::SlabPrime: return "slab-upper";
  }
  return "?";
}

Polyhedron Assembled::subsystem(const std::vector<RowGroup>& groups) const {
  Polyhedron out(P.dim());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (std::find(groups.begin(), groups.end(), rows[i].group) != groups.end()) out.add_inequality(P.inequalities()[i]);
  }
  return out;
}

Polyhedron Assembled::lower_system() const {
  return subsystem({RowGroup::RotatedLower, RowGroup::BottomSupport, RowGroup::Cap});
}

Assembled assemble_polyhedron(const StepProblem& prob, const BoundSet& bounds) {
  const Face& F = prob.face;
  const Face& G = prob.face_delta;
  const int k = F.side_count() + 1;
  if (bounds.k != k) throw Error(ErrorCode::DimMismatch, "bound set does not match the face");
  Assembled out;
  out.mode = bounds.mode;
  out.P = Polyhedron(F.dim());
  const auto add = [&](Vec n, double off, RowGroup g, int idx, double l) {
    out.P.add_inequality(Halfspace(std::move(n), off));
    out.rows.push_back({g, idx, l});
  };
  for (int i = 0; i < k - 1; ++i) {
    const double l = bounds.rotated(i);
    add(F.side_normals[i] - l * F.base_normal, F.side_offsets[i] - l * F.base_offset, RowGroup::RotatedLower, i, l);
  }
  add(-F.base_normal, -F.base_offset, RowGroup::BottomSupport, 0, 0.0);
  add(F.base_normal, F.base_offset + bounds.cap(), RowGroup::Cap, 0, bounds.cap());
  for (int i = 0; i < k - 1; ++i) {
    add(F.side_normals[i], F.side_offsets[i] + bounds.slab(i), RowGroup::Slab, i, bounds.slab(i));
  }
  for (int i = 0; i < k - 1; ++i) {
    const double l = bounds.rotated_prime(i);
    add(G.side_normals[i] + l * G.base_normal, G.side_offsets[i] + l * G.base_offset, RowGroup::RotatedUpper, i, l);
  }
  add(G.base_normal, G.base_offset, RowGroup::TopSupport, 0, 0.0);
  add(-G.base_normal, -G.base_offset + bounds.cap_prime(), RowGroup::CapPrime, 0, bounds.cap_prime());
  for (int i = 0; i < k - 1; ++i) {
    add(G.side_normals[i], G.side_offsets[i] + bounds.slab_prime(i), RowGroup::SlabPrime, i, bounds.slab_prime(i));
  }
  return out;
}

double bloat_eps(double M0, double normA, double delta) {
  const double x = normA * delta;
  // expm1 keeps the small-step cancellation in check
  return M0 * (std::expm1(x) - x - 0.375 * x * x);
}

BloatedHull bloat_hull(const Face& face, const Face& face_delta, const Mat& A, double delta, std::optional<double> eps) {
  if (face.dim() != 2) throw Error(ErrorCode::DimUnsupported, "bloated hull is implemented in 2D only");
  std::vector<Vec> pts = vertices_2d(face.as_polyhedron());
  for (const auto& v : vertices_2d(face_delta.as_polyhedron())) pts.push_back(v);
  BloatedHull out;
  out.eps = eps.value_or(bloat_eps(flow::max_norm_over_face(face).value, flow::operator_norm(A), delta));
  bool coincide = true;
  for (const auto& p : pts) coincide = coincide && (p - pts.front()).norm() == 0.0;
  if (coincide) {
    out.hull.vertices = {pts.front()};
    out.hull.degenerate = true;
    out.hull.polygon = Polyhedron::box(pts.front(), pts.front());
  } else {
    while (pts.size() < 3) pts.push_back(pts.front());
    out.hull = convex_hull_2d(pts);
  }
  out.P = Polyhedron(2);
  for (const auto& r : out.hull.polygon.inequalities()) {
    const Halfspace u = r.normalized();
    out.P.add_inequality(Halfspace(u.normal, u.offset + out.eps));
  }
  return out;
}

namespace {

StepPiece build_piece(const Face& face, const Mat& A, double delta, double t0, const StepOptions& opts) {
  StepPiece piece;
  piece.problem = make_problem(face, A, delta, opts.delta0);
  piece.t0 = t0;
  piece.bounds = opts.mode == BoundMode::Conservative ? conservative_bounds(piece.problem)
                                                       : sampled_bounds(piece.problem, opts.sample_nx, opts.sample_nt);
  piece.assembled = assemble_polyhedron(piece.problem, piece.bounds);
  piece.polygon = piece.assembled.P;
  if (opts.intersect_hull && face.dim() == 2) {
    piece.polygon = intersect({piece.assembled.P, bloat_hull(piece.problem.face, piece.problem.face_delta, A, delta).P});
  }
  return piece;
}

}  // namespace

StepResult overapproximate_step(const Face& face, const Mat& A, double delta, const StepOptions& opts) {
  StepResult res;
  res.delta_requested = delta;
  const StepProblem first = make_problem(face, A, delta, opts.delta0);
  res.c1 = check_C1(first);
  if (res.c1.holds) {
    res.delta_used = delta;
    res.pieces.push_back(build_piece(first.face, A, delta, 0.0, opts));
    return res;
  }
  // Shrink to the certified step and chain pieces over the requested horizon.
  const double cap = select_delta(first.M0, flow::operator_norm(A), first.delta_min, first.delta0);
  const int n = std::max(2, static_cast<int>(std::ceil(delta / cap - 1e-12)));
  const double step = delta / n;
  res.shrunk = true;
  res.delta_used = step;
  for (int j = 0; j < n; ++j) {
    const Face fj = j == 0 ? first.face : propagate_face(first.face, A, j * step);
    res.pieces.push_back(build_piece(fj, A, step, j * step, opts));
  }
  return res;
}

std::vector<Polyhedron> propagate_tube(const Polyhedron& P0, const Mat& A, double delta, int steps) {
  if (steps < 1) throw Error(ErrorCode::PreconditionViolated, "need at least one step");
  std::vector<Polyhedron> out;
  for (int s = 1; s <= steps; ++s) {
    const Mat M = flow::expm(-A.transpose(), s * delta);
    Polyhedron P(P0.dim());
    for (const auto& r : P0.inequalities()) P.add_inequality(Halfspace(M * r.normal, r.offset).normalized());
    for (const auto& r : P0.equalities()) P.add_equality(Halfspace(M * r.normal, r.offset).normalized());
    out.push_back(std::move(P));
  }
  return out;
}

}  // namespace reachkit::poly
