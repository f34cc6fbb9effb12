#include "reachkit/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace reachkit::flow {

Dynamics::Dynamics(Linear lin) : rep_(std::move(lin)) {
  const Mat& A = std::get<Linear>(rep_).A;
  if (A.rows() != A.cols() || A.rows() == 0) throw Error(ErrorCode::DimMismatch, "dynamics matrix must be square and nonempty");
  if (!A.allFinite()) throw Error(ErrorCode::NumericRange, "dynamics matrix has non-finite entries");
}

Dynamics::Dynamics(Nonlinear nl) : rep_(std::move(nl)) {
  const auto& comps = std::get<Nonlinear>(rep_).components;
  if (comps.empty()) throw Error(ErrorCode::DimMismatch, "vector field needs at least one component");
  const int n = static_cast<int>(comps.size());
  jac_.reserve(n);
  for (const auto& c : comps) jac_.push_back(gradient(c, n));
}

Dynamics Dynamics::parse(const std::vector<std::string>& components) {
  const int n = static_cast<int>(components.size());
  Nonlinear nl;
  nl.components.reserve(n);
  for (const auto& s : components) nl.components.push_back(Expr::parse(s, n));
  return Dynamics(std::move(nl));
}

int Dynamics::dim() const {
  if (const auto* lin = std::get_if<Linear>(&rep_)) return static_cast<int>(lin->A.rows());
  return static_cast<int>(std::get<Nonlinear>(rep_).components.size());
}

const Mat& Dynamics::matrix() const {
  if (const auto* lin = std::get_if<Linear>(&rep_)) return lin->A;
  throw Error(ErrorCode::Unsupported, "expression vector field has no constant matrix; linear dynamics required");
}

const std::vector<Expr>& Dynamics::components() const {
  if (const auto* nl = std::get_if<Nonlinear>(&rep_)) return nl->components;
  throw Error(ErrorCode::Unsupported, "linear dynamics has no expression components");
}

Vec Dynamics::field(const Vec& x) const {
  if (const auto* lin = std::get_if<Linear>(&rep_)) return lin->A * x;
  const auto& comps = std::get<Nonlinear>(rep_).components;
  Vec out(static_cast<Eigen::Index>(comps.size()));
  for (size_t i = 0; i < comps.size(); ++i) out(static_cast<Eigen::Index>(i)) = comps[i].eval(x);
  return out;
}

Mat Dynamics::jacobian(const Vec& x) const {
  if (const auto* lin = std::get_if<Linear>(&rep_)) return lin->A;
  const int n = dim();
  Mat J(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) J(i, j) = jac_[i][j].eval(x);
  }
  return J;
}

Dynamics Dynamics::negated() const {
  if (const auto* lin = std::get_if<Linear>(&rep_)) return Dynamics::linear(-lin->A);
  Nonlinear nl;
  for (const auto& c : std::get<Nonlinear>(rep_).components) nl.components.push_back(-c);
  return Dynamics(std::move(nl));
}

Mat expm(const Mat& A0, double t) {
  if (!A0.allFinite() || !std::isfinite(t)) throw Error(ErrorCode::NumericRange, "expm input is not finite");
  const Eigen::Index n = A0.rows();
  const Mat I = Mat::Identity(n, n);
  Mat A = A0 * t;
  if (A.isZero(0.0)) return I;

  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0, 129060195264000.0,
      10559470521600.0,    670442572800.0,      33522128640.0,      1323241920.0,       40840800.0,
      960960.0,            16380.0,             182.0,              1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13) s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  if (s > 0) A /= std::ldexp(1.0, s);

  const Mat A2 = A * A;
  const Mat A4 = A2 * A2;
  const Mat A6 = A4 * A2;
  const Mat U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  const Mat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  Mat R = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < s; ++i) R = R * R;
  if (!R.allFinite()) throw Error(ErrorCode::NumericRange, "matrix exponential overflowed");
  return R;
}

Vec rk4(const std::function<Vec(const Vec&)>& f, const Vec& x0, double t, int steps) {
  Vec x = x0;
  if (steps <= 0 || t == 0.0) return x;
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Vec k1 = f(x);
    const Vec k2 = f(x + 0.5 * h * k1);
    const Vec k3 = f(x + 0.5 * h * k2);
    const Vec k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

int rk4_steps(double t, double tol) {
  if (t <= 0.0) return 0;
  const double h = std::min(std::pow(tol, 0.25), t / 32.0);
  return static_cast<int>(std::ceil(t / h - 1e-9));
}

Vec flow(const Dynamics& dyn, const Vec& x0, double t, double tol) {
  if (t < 0.0) throw Error(ErrorCode::PreconditionViolated, "flow time must be nonnegative");
  if (t == 0.0) return x0;
  Vec out;
  if (dyn.is_linear()) {
    out = expm(dyn.matrix(), t) * x0;
  } else {
    out = rk4([&dyn](const Vec& x) { return dyn.field(x); }, x0, t, rk4_steps(t, tol));
  }
  if (!out.allFinite()) throw Error(ErrorCode::NonFiniteState, "trajectory left the floating-point range");
  return out;
}

FlowSample flow_sample(const Dynamics& dyn, const Vec& x0, double t, double tol) {
  return FlowSample{x0, t, flow(dyn, x0, t, tol), tol};
}

std::vector<Vec> flow_path(const Dynamics& dyn, const Vec& x0, double t, int samples, double tol) {
  if (t < 0.0) throw Error(ErrorCode::PreconditionViolated, "flow time must be nonnegative");
  if (samples < 1) throw Error(ErrorCode::PreconditionViolated, "need at least one sample interval");
  std::vector<Vec> out;
  out.reserve(samples + 1);
  out.push_back(x0);
  if (t == 0.0) {
    for (int j = 0; j < samples; ++j) out.push_back(x0);
    return out;
  }
  const double dt = t / samples;
  if (dyn.is_linear()) {
    const Mat E = expm(dyn.matrix(), dt);
    for (int j = 0; j < samples; ++j) out.push_back(E * out.back());
  } else {
    const int per = std::max(1, static_cast<int>(std::ceil(double(rk4_steps(t, tol)) / samples)));
    const auto f = [&dyn](const Vec& x) { return dyn.field(x); };
    for (int j = 0; j < samples; ++j) out.push_back(rk4(f, out.back(), dt, per));
  }
  if (!out.back().allFinite()) throw Error(ErrorCode::NonFiniteState, "trajectory left the floating-point range");
  return out;
}

Vec reverse_flow(const Dynamics& dyn, const Vec& x0, double t, double tol) {
  if (dyn.is_linear()) {
    if (t < 0.0) throw Error(ErrorCode::PreconditionViolated, "flow time must be nonnegative");
    if (t == 0.0) return x0;
    Vec out = expm(dyn.matrix(), -t) * x0;
    if (!out.allFinite()) throw Error(ErrorCode::NonFiniteState, "trajectory left the floating-point range");
    return out;
  }
  return flow(dyn.negated(), x0, t, tol);
}

double operator_norm(const Mat& A) {
  if (A.size() == 0) return 0.0;
  const Mat B = A.transpose() * A;
  const Eigen::Index n = B.rows();
  double best = 0.0;
  // A start vector orthogonal to the dominant singular vector stalls; try a few.
  for (Eigen::Index start = 0; start <= n; ++start) {
    Vec v(n);
    if (start == 0) {
      for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * static_cast<double>(i);
    } else {
      v = Vec::Unit(n, start - 1);
    }
    v.normalize();
    double lambda = v.dot(B * v);
    for (int it = 0; it < 20000; ++it) {
      Vec w = B * v;
      const double wn = w.norm();
      if (wn == 0.0) {
        lambda = 0.0;
        break;
      }
      v = w / wn;
      const double next = v.dot(B * v);
      const bool done = std::abs(next - lambda) <= 1e-16 * std::max(1.0, next);
      lambda = next;
      if (done) break;
    }
    best = std::max(best, lambda);
    if (start == 0 && best > 0.0) break;
  }
  return std::sqrt(std::max(best, 0.0));
}

NormBound max_norm_over_face(const Face& face) {
  const Polyhedron P = face.as_polyhedron();
  if (face.dim() == 2) {
    std::vector<Vec> verts;
    try {
      verts = vertices_2d(P);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Unbounded2D) throw Error(ErrorCode::UnboundedFace, "face is unbounded");
      throw;
    }
    double m = 0.0;
    for (const auto& v : verts) m = std::max(m, v.norm());
    return {m, false};
  }
  Vec box(face.dim());
  for (int j = 0; j < face.dim(); ++j) {
    double m = 0.0;
    for (double sign : {1.0, -1.0}) {
      const lp::Result r = P.maximize(sign * Vec::Unit(face.dim(), j));
      if (r.status == lp::Status::Infeasible) throw Error(ErrorCode::InfeasibleFace, "face is empty");
      if (r.status == lp::Status::Unbounded) throw Error(ErrorCode::UnboundedFace, "face is unbounded");
      m = std::max(m, std::abs(r.value));
    }
    box(j) = m;
  }
  return {box.norm(), true};
}

}  // namespace reachkit::flow
