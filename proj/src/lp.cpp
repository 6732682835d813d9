#include "ccmm/lp.hpp"

#include <cmath>

namespace ccmm::lp {
namespace {

constexpr double kPivotEps = 1e-11;

struct Tableau {
  Mat T;  // m rows, last column is the right-hand side
  std::vector<int> basis;

  int rows() const { return static_cast<int>(T.rows()); }
  int rhs() const { return static_cast<int>(T.cols()) - 1; }

  void pivot(int r, int col) {
    T.row(r) /= T(r, col);
    for (int i = 0; i < rows(); ++i) {
      if (i == r) continue;
      const double f = T(i, col);
      if (f != 0.0) T.row(i) -= f * T.row(r);
    }
    basis[r] = col;
  }
};

// Bland's rule simplex on columns [0, n_allowed).  Returns false if unbounded.
bool run(Tableau& tab, const Vec& cost, int n_allowed, double tol) {
  const int m = tab.rows();
  const int max_iter = 50 * (n_allowed + m) + 1000;
  for (int it = 0; it < max_iter; ++it) {
    Vec cb(m);
    for (int i = 0; i < m; ++i) cb(i) = cost(tab.basis[i]);
    int enter = -1;
    for (int j = 0; j < n_allowed; ++j) {
      bool basic = false;
      for (int i = 0; i < m && !basic; ++i) basic = tab.basis[i] == j;
      if (basic) continue;
      const double reduced = cost(j) - cb.dot(tab.T.col(j).head(m));
      if (reduced < -tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;
    int leave = -1;
    double best = kInf;
    for (int i = 0; i < m; ++i) {
      const double a = tab.T(i, enter);
      if (a <= kPivotEps) continue;
      const double ratio = tab.T(i, tab.rhs()) / a;
      if (ratio < best - 1e-15 ||
          (std::abs(ratio - best) <= 1e-15 && leave >= 0 && tab.basis[i] < tab.basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) return false;
    tab.pivot(leave, enter);
  }
  return true;
}

}  // namespace

Result minimize(const Mat& A_in, const Vec& b_in, const Vec& c, double tol) {
  const int m = static_cast<int>(A_in.rows());
  const int n = static_cast<int>(A_in.cols());
  Result result;
  if (m == 0) {
    // Only x >= 0 remains.
    if ((c.array() < -tol).any()) {
      result.status = Status::unbounded;
      return result;
    }
    result.status = Status::optimal;
    result.x = Vec::Zero(n);
    return result;
  }

  Tableau tab;
  tab.T = Mat::Zero(m, n + m + 1);
  tab.T.leftCols(n) = A_in;
  tab.T.block(0, n, m, m).setIdentity();
  tab.T.col(n + m) = b_in;
  for (int i = 0; i < m; ++i) {
    if (b_in(i) < 0) {
      tab.T.row(i).head(n) *= -1.0;
      tab.T(i, n + m) *= -1.0;
    }
  }
  tab.basis.resize(m);
  for (int i = 0; i < m; ++i) tab.basis[i] = n + i;

  Vec phase1 = Vec::Zero(n + m);
  phase1.tail(m).setOnes();
  run(tab, phase1, n + m, tol * 1e-3);
  double infeas = 0.0;
  for (int i = 0; i < m; ++i)
    if (tab.basis[i] >= n) infeas += tab.T(i, n + m);
  const double scale = 1.0 + b_in.cwiseAbs().sum();
  if (infeas > tol * scale) {
    result.status = Status::infeasible;
    return result;
  }

  // Drive artificial variables out of the basis where possible.
  for (int i = 0; i < m; ++i) {
    if (tab.basis[i] < n) continue;
    int col = -1;
    double best = 1e-9;
    for (int j = 0; j < n; ++j) {
      if (std::abs(tab.T(i, j)) > best) {
        best = std::abs(tab.T(i, j));
        col = j;
      }
    }
    if (col >= 0) tab.pivot(i, col);
  }

  Vec phase2 = Vec::Zero(n + m);
  phase2.head(n) = c;
  if (!run(tab, phase2, n, tol * 1e-3)) {
    result.status = Status::unbounded;
    return result;
  }
  result.status = Status::optimal;
  result.x = Vec::Zero(n);
  for (int i = 0; i < m; ++i)
    if (tab.basis[i] < n) result.x(tab.basis[i]) = std::max(0.0, tab.T(i, n + m));
  result.objective = c.dot(result.x);
  return result;
}

}  // namespace ccmm::lp
