#pragma once

#include <Eigen/Dense>

namespace reachkit::lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
  Status status = Status::Infeasible;
  double value = 0.0;
  Eigen::VectorXd x;
};

/// maximize c^T x  s.t.  A_le x <= b_le,  A_eq x = b_eq,  x free.
///
/// Dense two-phase tableau simplex with Bland's anti-cycling rule. Intended
/// for the small systems that show up here (a handful of variables, at most a
/// few hundred rows); no attempt is made at sparse or revised updates.
Result maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A_le, const Eigen::VectorXd& b_le,
                const Eigen::MatrixXd& A_eq, const Eigen::VectorXd& b_eq, double tol = 1e-9);

}  // namespace reachkit::lp
