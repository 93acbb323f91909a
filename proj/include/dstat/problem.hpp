#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dstat/expr.hpp"

namespace dstat {

// |rho| at or below this counts as feasible in reports and index sets.
inline constexpr double kFeasTol = 1e-9;

// z = (theta, u_1, ..., u_L); also used for directions d.
struct Blocks {
  std::vector<double> theta;
  std::vector<std::vector<double>> u;
};
using Point = Blocks;
using Direction = Blocks;

// Optional tag for problems built by a generator with known closed-form moduli.
struct Structure {
  std::string kind;  // "rnn"
  int N = 1;
  int T = 1;
  int n0 = 0;
  int n1 = 0;
  int n2 = 0;
  double alpha = 0.0;
};

struct CompositeProblem {
  int n = 0;
  std::vector<int> dims;                  // N_1..N_L
  std::vector<std::vector<Expr>> layers;  // layers[l-1] = components of psi_{l-1}
  Expr outer;                             // g(u)
  double lambda = 1.0;
  std::optional<std::vector<double>> beta;
  std::optional<Structure> structure;

  int L() const { return static_cast<int>(dims.size()); }
  int total_u() const;
  int total() const { return n + total_u(); }
  int offset(int layer) const;  // position of u_layer inside the flat z (layer is 1-based)
  void validate() const;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, int layer) : std::runtime_error(what), layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

struct Residuals {
  std::vector<std::vector<double>> rho;  // u_l - psi_{l-1}(theta, u_1..u_{l-1})
  std::vector<double> l1;
  double max_abs = 0.0;
  bool feasible = true;
};

void check_point(const CompositeProblem& p, const Blocks& z);
void check_beta(const CompositeProblem& p, const std::vector<double>& beta);

Blocks zeros_like(const CompositeProblem& p);
Eigen::VectorXd flatten(const CompositeProblem& p, const Blocks& z);
Blocks unflatten(const CompositeProblem& p, const Eigen::VectorXd& x);
Blocks axpy(double t, const Blocks& d, const Blocks& z);  // z + t d
double max_abs(const Blocks& d);

// psi_{l-1} evaluated on the given z (u blocks of layers < l are read).
std::vector<double> eval_layer(const CompositeProblem& p, int layer, const std::vector<double>& theta,
                               const std::vector<std::vector<double>>& u);

Point eval_layers(const CompositeProblem& p, const std::vector<double>& theta);
double eval_g(const CompositeProblem& p, const std::vector<std::vector<double>>& u);
double eval_F(const CompositeProblem& p, const Point& z);
double eval_Theta(const CompositeProblem& p, const Point& z, const std::vector<double>& beta);
// Psi(theta) + lambda |theta|^2 through the nested forward pass.
double eval_objective(const CompositeProblem& p, const std::vector<double>& theta);
Residuals residuals(const CompositeProblem& p, const Point& z);

std::pair<Point, double> reference_point_and_level(const CompositeProblem& p, const std::vector<double>& beta,
                                                   const std::optional<Point>& feasible = std::nullopt);

// Negative values of g are flagged, never rejected.
bool g_nonnegative(const CompositeProblem& p, const Point& z);

}  // namespace dstat
