#include "doctest.h"

#include "dstat/lp.hpp"

using namespace dstat;

TEST_CASE("textbook maximization") {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18: optimum (2, 6), value 36.
  Eigen::VectorXd c(2);
  c << -3.0, -5.0;
  Eigen::MatrixXd A(3, 2);
  A << 1, 0, 0, 2, 3, 2;
  Eigen::VectorXd b(3);
  b << 4, 12, 18;
  auto r = lp_minimize(c, A, b);
  REQUIRE(r.status == LpResult::Status::Optimal);
  CHECK(r.value == doctest::Approx(-36.0));
  CHECK(r.x[0] == doctest::Approx(2.0));
  CHECK(r.x[1] == doctest::Approx(6.0));
}

TEST_CASE("negative right-hand side needs phase one") {
  // min x + y s.t. x + y >= 2 (as -x - y <= -2), x <= 3.
  Eigen::VectorXd c(2);
  c << 1.0, 1.0;
  Eigen::MatrixXd A(2, 2);
  A << -1, -1, 1, 0;
  Eigen::VectorXd b(2);
  b << -2, 3;
  auto r = lp_minimize(c, A, b);
  REQUIRE(r.status == LpResult::Status::Optimal);
  CHECK(r.value == doctest::Approx(2.0));
}

TEST_CASE("infeasible and unbounded programs") {
  Eigen::VectorXd c(1);
  c << 1.0;
  Eigen::MatrixXd A(2, 1);
  A << 1, -1;
  Eigen::VectorXd b(2);
  b << 1, -2;  // x <= 1 and x >= 2
  CHECK(lp_minimize(c, A, b).status == LpResult::Status::Infeasible);

  Eigen::VectorXd c2(1);
  c2 << -1.0;
  Eigen::MatrixXd A2(1, 1);
  A2 << -1;
  Eigen::VectorXd b2(1);
  b2 << 0;
  CHECK(lp_minimize(c2, A2, b2).status == LpResult::Status::Unbounded);
}

TEST_CASE("degenerate vertex does not cycle") {
  // Beale-type degenerate program; Bland's rule must terminate.
  Eigen::VectorXd c(4);
  c << -0.75, 150.0, -0.02, 6.0;
  Eigen::MatrixXd A(3, 4);
  A << 0.25, -60.0, -0.04, 9.0, 0.5, -90.0, -0.02, 3.0, 0.0, 0.0, 1.0, 0.0;
  Eigen::VectorXd b(3);
  b << 0, 0, 1;
  auto r = lp_minimize(c, A, b);
  REQUIRE(r.status == LpResult::Status::Optimal);
  CHECK(r.value == doctest::Approx(-0.05));
}
