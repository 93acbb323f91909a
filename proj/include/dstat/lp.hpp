#pragma once

#include <Eigen/Dense>

namespace dstat {

struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };
  Status status = Status::Infeasible;
  Eigen::VectorXd x;
  double value = 0.0;
};

// Dense two-phase simplex with Bland's rule:
//   minimize c.x  subject to  A x <= b,  x >= 0.
// Intended for the small direction-finding programs of the stationarity checks.
LpResult lp_minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace dstat
