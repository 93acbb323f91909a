#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dstat/algebra.hpp"
#include "dstat/problem.hpp"

namespace dstat {

struct DDValue {
  double value = 0.0;
  double first = 0.0;
  std::optional<double> second;
};

// Expression over parameters only: leaves param(i) read x[i].
DDValue dd_expr(const Expr& e, const std::vector<double>& x, const std::vector<double>& d, int order);
// Expression over (theta, u): straight-line leaves (x + t d).
DDValue dd_expr(const Expr& e, const Blocks& x, const Blocks& d, int order);

// (Psi + lambda|.|^2)'(theta; d_theta) through the nested forward pass.
DDValue dd_Psi(const CompositeProblem& p, const std::vector<double>& theta, const std::vector<double>& dtheta,
               int order);
DDValue dd_F(const CompositeProblem& p, const Point& z, const Direction& d, int order);
DDValue dd_Theta(const CompositeProblem& p, const Point& z, const Direction& d, const std::vector<double>& beta,
                 int order);

// Jets of psi_{l-1} along the straight line z + t d, plus the jet of g.
struct StraightJets {
  std::vector<std::vector<Jet2>> psi;
  Jet2 g;
  int ties = 0;
};
StraightJets straight_jets(const CompositeProblem& p, const Point& z, const Direction& d);

// Jets of u_l(theta + t d_theta) along the forward pass, and of the objective.
struct NestedJets {
  std::vector<std::vector<Jet2>> u;
  Jet2 objective;
  int ties = 0;
};
NestedJets nested_jets(const CompositeProblem& p, const std::vector<double>& theta,
                       const std::vector<double>& dtheta);

// Number of tied max branches met when evaluating every layer and g at z.
int count_ties(const CompositeProblem& p, const Point& z);

struct IndexSets {
  // 0-based component indices per layer.
  std::vector<std::vector<int>> plus, minus, zero;
  std::vector<std::vector<int>> zero_plus, zero_minus, zero_zero;  // filled when d is given
};
IndexSets index_sets(const CompositeProblem& p, const Point& z, const std::optional<Direction>& d = std::nullopt);

struct OracleOptions {
  double tau0 = 1e-2;
  int halvings = 20;
  double tol = 1e-6;
};

struct OracleResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = false;
  double tau = 0.0;
};

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

// Limit of the first- or second-order difference quotient along d,
// extrapolated over tau_k = tau0 2^-k.
OracleResult fd_oracle(const ScalarFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& d, int order,
                       const OracleOptions& opt = {});

// Second-order quotient (f(x + t v(t)) - f(x) - t f'(x; v(t))) / (t^2/2) along a
// moving direction v(t).
OracleResult path_quotient(const ScalarFn& f, const std::function<double(const Eigen::VectorXd&)>& fprime,
                           const Eigen::VectorXd& x, const std::function<Eigen::VectorXd(double)>& v,
                           const OracleOptions& opt = {});

// Compares the fixed-direction second derivative with the quotients along
// v +- t w. Disagreement means the function is not twice semidifferentiable
// at x although it is twice directionally differentiable along v.
struct SemidiffProbe {
  double fixed = 0.0;
  OracleResult path_plus;
  OracleResult path_minus;
  bool discrepancy = false;
};
SemidiffProbe probe_twice_semidiff(const Expr& e, const std::vector<double>& x, const std::vector<double>& v,
                                   const std::vector<double>& w, double tol = 1e-3);

}  // namespace dstat
