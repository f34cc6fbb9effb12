#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "reachkit/expr.hpp"
#include "reachkit/geometry.hpp"

namespace reachkit::flow {

/// Default integrator tolerance; RK4 step is min(tol^(1/4), t/32).
inline constexpr double kDefaultTol = 1e-12;

struct Linear {
  Mat A;
};

struct Nonlinear {
  std::vector<Expr> components;
};

/// Vector field of one location: either x' = A x or x' = f(x) given by expressions.
class Dynamics {
 public:
  Dynamics() = default;
  explicit Dynamics(Linear lin);
  explicit Dynamics(Nonlinear nl);

  static Dynamics linear(Mat A) { return Dynamics(Linear{std::move(A)}); }
  /// Parses one expression per coordinate (grammar in expr.hpp).
  static Dynamics parse(const std::vector<std::string>& components);

  [[nodiscard]] int dim() const;
  [[nodiscard]] bool is_linear() const { return std::holds_alternative<Linear>(rep_); }
  /// The linear matrix; throws Unsupported for expression fields.
  [[nodiscard]] const Mat& matrix() const;
  [[nodiscard]] const std::vector<Expr>& components() const;

  [[nodiscard]] Vec field(const Vec& x) const;
  /// Jacobian, symbolic for expression fields.
  [[nodiscard]] Mat jacobian(const Vec& x) const;
  /// The same field with the sign flipped (x' = -f(x)).
  [[nodiscard]] Dynamics negated() const;

 private:
  std::variant<Linear, Nonlinear> rep_;
  std::vector<std::vector<Expr>> jac_;  // cached symbolic partials for Nonlinear
};

struct FlowSample {
  Vec origin;
  double time = 0.0;
  Vec value;
  double tol = kDefaultTol;
};

/// e^{A t} by scaling and squaring with a degree-13 Pade approximant.
Mat expm(const Mat& A, double t = 1.0);

/// Fixed-step classical RK4 with exactly `steps` steps over [0, t].
Vec rk4(const std::function<Vec(const Vec&)>& f, const Vec& x0, double t, int steps);

/// Step count used by flow() for a nonlinear field.
int rk4_steps(double t, double tol);

/// phi(x0, t). Linear: expm(A t) x0. Otherwise RK4 with h = min(tol^(1/4), t/32).
Vec flow(const Dynamics& dyn, const Vec& x0, double t, double tol = kDefaultTol);
FlowSample flow_sample(const Dynamics& dyn, const Vec& x0, double t, double tol = kDefaultTol);

/// States at t * j / samples for j = 0..samples, integrated with at least the
/// accuracy of flow().
std::vector<Vec> flow_path(const Dynamics& dyn, const Vec& x0, double t, int samples, double tol = kDefaultTol);

/// psi(x0, t): the flow of x' = -f(x).
Vec reverse_flow(const Dynamics& dyn, const Vec& x0, double t, double tol = kDefaultTol);

/// Induced 2-norm via power iteration on A^T A.
double operator_norm(const Mat& A);

struct NormBound {
  double value = 0.0;
  bool bound_mode = false;  // true when value is an upper bound rather than the exact max
};

/// max ||x|| over the face. Exact (vertex maximum) in 2D; in higher dimension an
/// upper bound from the per-coordinate LP box.
NormBound max_norm_over_face(const Face& face);

}  // namespace reachkit::flow
