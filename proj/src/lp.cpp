#include "dstat/lp.hpp"

#include <cmath>
#include <vector>

namespace dstat {

namespace {

constexpr double kEps = 1e-11;

struct Tableau {
  Eigen::MatrixXd T;  // rows 0..m-1 constraints, row m objective; last column rhs
  std::vector<int> basis;
  int m = 0;
  int cols = 0;  // variable columns

  void pivot(int r, int c) {
    T.row(r) /= T(r, c);
    for (int i = 0; i <= m; ++i)
      if (i != r && T(i, c) != 0.0) T.row(i) -= T(i, c) * T.row(r);
    basis[r] = c;
  }

  // Returns false when unbounded. `allowed` limits entering columns.
  LpResult::Status run(int allowed, int max_iter) {
    for (int it = 0; it < max_iter; ++it) {
      int enter = -1;
      for (int j = 0; j < allowed; ++j)
        if (T(m, j) < -kEps) {
          enter = j;
          break;
        }
      if (enter < 0) return LpResult::Status::Optimal;
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        if (T(i, enter) > kEps) {
          double ratio = T(i, cols) / T(i, enter);
          if (leave < 0 || ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && basis[i] < basis[leave])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return LpResult::Status::Unbounded;
      pivot(leave, enter);
    }
    return LpResult::Status::IterationLimit;
  }
};

}  // namespace

LpResult lp_minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(A.rows());
  std::vector<int> art_rows;
  for (int i = 0; i < m; ++i)
    if (b[i] < 0.0) art_rows.push_back(i);
  const int k = static_cast<int>(art_rows.size());

  Tableau tb;
  tb.m = m;
  tb.cols = n + m + k;
  tb.T = Eigen::MatrixXd::Zero(m + 1, tb.cols + 1);
  tb.basis.assign(m, -1);
  int a = 0;
  for (int i = 0; i < m; ++i) {
    double s = b[i] < 0.0 ? -1.0 : 1.0;
    tb.T.block(i, 0, 1, n) = s * A.row(i);
    tb.T(i, n + i) = s;
    tb.T(i, tb.cols) = s * b[i];
    if (b[i] < 0.0) {
      tb.T(i, n + m + a) = 1.0;
      tb.basis[i] = n + m + a;
      ++a;
    } else {
      tb.basis[i] = n + i;
    }
  }
  const int max_iter = 50 * (tb.cols + m + 10);
  LpResult res;
  if (k > 0) {
    for (int i : art_rows) tb.T.row(m) -= tb.T.row(i);
    for (int j = n + m; j < tb.cols; ++j) tb.T(m, j) = 0.0;
    auto st = tb.run(tb.cols, max_iter);
    if (st == LpResult::Status::IterationLimit) {
      res.status = st;
      return res;
    }
    if (-tb.T(m, tb.cols) > 1e-9) {
      res.status = LpResult::Status::Infeasible;
      return res;
    }
    for (int i = 0; i < m; ++i) {
      if (tb.basis[i] >= n + m) {
        for (int j = 0; j < n + m; ++j)
          if (std::abs(tb.T(i, j)) > 1e-9) {
            tb.pivot(i, j);
            break;
          }
      }
    }
  }
  tb.T.row(m).setZero();
  for (int j = 0; j < n; ++j) tb.T(m, j) = c[j];
  for (int i = 0; i < m; ++i) {
    int bj = tb.basis[i];
    if (bj < n && c[bj] != 0.0) tb.T.row(m) -= c[bj] * tb.T.row(i);
  }
  auto st = tb.run(n + m, max_iter);
  res.status = st;
  if (st != LpResult::Status::Optimal) return res;
  res.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (tb.basis[i] < n) res.x[tb.basis[i]] = tb.T(i, tb.cols);
  res.value = c.dot(res.x);
  return res;
}

}  // namespace dstat
