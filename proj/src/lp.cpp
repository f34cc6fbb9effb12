#include "reachkit/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace reachkit::lp {

namespace {

struct Tableau {
  Eigen::MatrixXd t;       // rows 0..m-1 constraints, row m objective (reduced costs)
  std::vector<int> basis;  // basic column per constraint row
  int rhs = 0;             // rhs column index
};

void pivot(Tableau& tab, int row, int col) {
  const int rows = static_cast<int>(tab.t.rows());
  tab.t.row(row) /= tab.t(row, col);
  for (int r = 0; r < rows; ++r) {
    if (r == row) continue;
    const double f = tab.t(r, col);
    if (f != 0.0) tab.t.row(r) -= f * tab.t.row(row);
  }
  tab.basis[row] = col;
}

// Maximizes with the reduced costs stored in the last row. Columns >= col_limit
// never enter. Returns false when unbounded.
bool run_simplex(Tableau& tab, int col_limit, double tol) {
  const int m = static_cast<int>(tab.basis.size());
  const int obj = m;
  for (int iter = 0; iter < 50000; ++iter) {
    int enter = -1;
    for (int j = 0; j < col_limit; ++j) {
      if (tab.t(obj, j) > tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;

    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = tab.t(i, enter);
      if (a <= tol) continue;
      const double ratio = tab.t(i, tab.rhs) / a;
      if (ratio < best - tol || (std::abs(ratio - best) <= tol && leave >= 0 && tab.basis[i] < tab.basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) return false;
    pivot(tab, leave, enter);
  }
  return true;
}

}  // namespace

Result maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A_le, const Eigen::VectorXd& b_le,
                const Eigen::MatrixXd& A_eq, const Eigen::VectorXd& b_eq, double tol) {
  const int n = static_cast<int>(c.size());
  const int m_le = static_cast<int>(A_le.rows());
  const int m_eq = static_cast<int>(A_eq.rows());
  const int m = m_le + m_eq;

  // Columns: x+ (n), x- (n), slack (m_le), artificial (m), rhs.
  const int slack0 = 2 * n;
  const int art0 = slack0 + m_le;
  const int rhs = art0 + m;

  Tableau tab;
  tab.t = Eigen::MatrixXd::Zero(m + 1, rhs + 1);
  tab.basis.assign(m, 0);
  tab.rhs = rhs;

  auto load_row = [&](int i, const Eigen::RowVectorXd& a, double b, int slack_col) {
    double scale = a.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) scale = 1.0;
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(rhs + 1);
    row.segment(0, n) = a / scale;
    row.segment(n, n) = -a / scale;
    if (slack_col >= 0) row(slack_col) = 1.0 / scale;
    row(rhs) = b / scale;
    if (row(rhs) < 0.0) row = -row;
    row(art0 + i) = 1.0;
    tab.t.row(i) = row;
    tab.basis[i] = art0 + i;
  };
  for (int i = 0; i < m_le; ++i) load_row(i, A_le.row(i), b_le(i), slack0 + i);
  for (int i = 0; i < m_eq; ++i) load_row(m_le + i, A_eq.row(i), b_eq(i), -1);

  // Phase 1: maximize -sum(artificial).
  for (int j = 0; j < art0; ++j) tab.t(m, j) = tab.t.topRows(m).col(j).sum();
  tab.t(m, rhs) = tab.t.topRows(m).col(rhs).sum();
  run_simplex(tab, art0, tol);

  Result result;
  if (tab.t(m, rhs) > 1e-7 * (1.0 + std::abs(tab.t.topRows(m).col(rhs).sum()))) {
    result.status = Status::Infeasible;
    return result;
  }

  // Drive artificials out of the basis; rows that cannot be repaired are redundant.
  std::vector<bool> dead(m, false);
  for (int i = 0; i < m; ++i) {
    if (tab.basis[i] < art0) continue;
    int col = -1;
    for (int j = 0; j < art0; ++j) {
      if (std::abs(tab.t(i, j)) > tol) {
        col = j;
        break;
      }
    }
    if (col >= 0) {
      pivot(tab, i, col);
    } else {
      dead[i] = true;
    }
  }
  for (int i = 0; i < m; ++i) {
    if (dead[i]) {
      tab.t.row(i).setZero();
      tab.basis[i] = art0 + i;  // inert: zero row never wins a ratio test
    }
  }

  // Phase 2 reduced costs.
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(art0);
  cost.segment(0, n) = c;
  cost.segment(n, n) = -c;
  tab.t.row(m).setZero();
  for (int j = 0; j < art0; ++j) tab.t(m, j) = cost(j);
  for (int i = 0; i < m; ++i) {
    const int b = tab.basis[i];
    if (b < art0 && cost(b) != 0.0) tab.t.row(m) -= cost(b) * tab.t.row(i);
  }
  for (int j = art0; j < rhs; ++j) tab.t(m, j) = 0.0;

  if (!run_simplex(tab, art0, tol)) {
    result.status = Status::Unbounded;
    result.value = std::numeric_limits<double>::infinity();
    return result;
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(art0);
  for (int i = 0; i < m; ++i) {
    if (tab.basis[i] < art0) z(tab.basis[i]) = tab.t(i, rhs);
  }
  result.status = Status::Optimal;
  result.x = z.segment(0, n) - z.segment(n, n);
  result.value = c.dot(result.x);
  return result;
}

}  // namespace reachkit::lp
