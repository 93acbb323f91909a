#pragma once

#include <string>
#include <vector>

#include "dstat/problem.hpp"
#include "dstat/stationarity.hpp"

namespace dstat {

// Two-layer scalar instance: u1 = theta, u2 = u1^2, g = [-u1^2 + 0.5 u2 + 1e-4]_+, lambda = 0.01.
CompositeProblem ex2_problem();
// u1 = [theta_1]_+, u2 = 1 - (theta_2 + 1) u1, g = u2^2, lambda = 1.
CompositeProblem appendix_a_problem();
// max{-1, x1 x2} + 0.1 |x|^2 on [-1, 1]^2.
BoxProblem example3_box();
// |x1 - x2^3|.
Expr appendix_c_expr();

struct ReproCheck {
  std::string label;
  double value = 0.0;
  double expected = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct ReproResult {
  std::string name;
  std::vector<ReproCheck> checks;
  std::vector<std::string> lines;  // human-readable table
  double seconds = 0.0;
  bool pass() const;
};

std::vector<std::string> repro_names();
ReproResult run_repro(const std::string& name);  // throws std::invalid_argument on unknown names

}  // namespace dstat
