#include "dstat/problem.hpp"

#include <cmath>

#include "dstat/algebra.hpp"

namespace dstat {

int CompositeProblem::total_u() const {
  int s = 0;
  for (int d : dims) s += d;
  return s;
}

int CompositeProblem::offset(int layer) const {
  int off = n;
  for (int l = 1; l < layer; ++l) off += dims[l - 1];
  return off;
}

void CompositeProblem::validate() const {
  if (n < 0) throw DimensionError("n must be nonnegative");
  if (!(lambda > 0.0)) throw DimensionError("lambda must be positive");
  if (layers.size() != dims.size()) throw DimensionError("layer count does not match dims.N");
  for (int l = 1; l <= L(); ++l) {
    if (dims[l - 1] <= 0) throw DimensionError("layer " + std::to_string(l) + " has nonpositive width");
    if (static_cast<int>(layers[l - 1].size()) != dims[l - 1])
      throw DimensionError("layer " + std::to_string(l) + " has " + std::to_string(layers[l - 1].size()) +
                           " components, dims say " + std::to_string(dims[l - 1]));
    for (const auto& e : layers[l - 1]) {
      try {
        dstat::validate(e, n, l - 1, dims);
      } catch (const ExprError& err) {
        throw ExprError("layer " + std::to_string(l) + ": " + err.what());
      }
    }
  }
  if (!outer) throw ExprError("missing outer function");
  try {
    dstat::validate(outer, 0, L(), dims);
  } catch (const ExprError& err) {
    throw ExprError(std::string("outer: ") + err.what());
  }
  if (beta) check_beta(*this, *beta);
}

void check_point(const CompositeProblem& p, const Blocks& z) {
  if (static_cast<int>(z.theta.size()) != p.n)
    throw DimensionError("theta has length " + std::to_string(z.theta.size()) + ", expected " +
                         std::to_string(p.n));
  if (static_cast<int>(z.u.size()) != p.L())
    throw DimensionError("expected " + std::to_string(p.L()) + " u blocks, got " + std::to_string(z.u.size()));
  for (int l = 1; l <= p.L(); ++l)
    if (static_cast<int>(z.u[l - 1].size()) != p.dims[l - 1])
      throw DimensionError("u block " + std::to_string(l) + " has wrong length");
}

void check_beta(const CompositeProblem& p, const std::vector<double>& beta) {
  if (static_cast<int>(beta.size()) != p.L())
    throw DimensionError("beta must have " + std::to_string(p.L()) + " entries");
  for (double b : beta)
    if (!(b > 0.0)) throw DimensionError("beta entries must be positive");
}

Blocks zeros_like(const CompositeProblem& p) {
  Blocks z;
  z.theta.assign(p.n, 0.0);
  for (int d : p.dims) z.u.emplace_back(d, 0.0);
  return z;
}

Eigen::VectorXd flatten(const CompositeProblem& p, const Blocks& z) {
  Eigen::VectorXd x(p.total());
  int k = 0;
  for (double t : z.theta) x[k++] = t;
  for (const auto& b : z.u)
    for (double t : b) x[k++] = t;
  return x;
}

Blocks unflatten(const CompositeProblem& p, const Eigen::VectorXd& x) {
  Blocks z = zeros_like(p);
  int k = 0;
  for (auto& t : z.theta) t = x[k++];
  for (auto& b : z.u)
    for (auto& t : b) t = x[k++];
  return z;
}

Blocks axpy(double t, const Blocks& d, const Blocks& z) {
  Blocks r = z;
  for (std::size_t i = 0; i < r.theta.size(); ++i) r.theta[i] += t * d.theta[i];
  for (std::size_t l = 0; l < r.u.size(); ++l)
    for (std::size_t i = 0; i < r.u[l].size(); ++i) r.u[l][i] += t * d.u[l][i];
  return r;
}

double max_abs(const Blocks& d) {
  double m = 0.0;
  for (double t : d.theta) m = std::max(m, std::abs(t));
  for (const auto& b : d.u)
    for (double t : b) m = std::max(m, std::abs(t));
  return m;
}

std::vector<double> eval_layer(const CompositeProblem& p, int layer, const std::vector<double>& theta,
                               const std::vector<std::vector<double>>& u) {
  ValueAlg alg;
  alg.theta = &theta;
  alg.u = &u;
  const auto& comps = p.layers[layer - 1];
  std::vector<double> out(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) out[i] = eval(*comps[i], alg);
  return out;
}

Point eval_layers(const CompositeProblem& p, const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) != p.n)
    throw DimensionError("theta has length " + std::to_string(theta.size()) + ", expected " +
                         std::to_string(p.n));
  Point z;
  z.theta = theta;
  z.u.reserve(p.L());
  for (int l = 1; l <= p.L(); ++l) {
    auto out = eval_layer(p, l, theta, z.u);
    for (double v : out)
      if (!std::isfinite(v)) throw EvalError("non-finite value in layer " + std::to_string(l), l);
    z.u.push_back(std::move(out));
  }
  return z;
}

double eval_g(const CompositeProblem& p, const std::vector<std::vector<double>>& u) {
  static const std::vector<double> none;
  ValueAlg alg;
  alg.theta = &none;
  alg.u = &u;
  return eval(*p.outer, alg);
}

double eval_F(const CompositeProblem& p, const Point& z) {
  check_point(p, z);
  double reg = 0.0;
  for (double t : z.theta) reg += t * t;
  double v = eval_g(p, z.u) + p.lambda * reg;
  if (!std::isfinite(v)) throw EvalError("non-finite objective value", p.L() + 1);
  return v;
}

Residuals residuals(const CompositeProblem& p, const Point& z) {
  check_point(p, z);
  Residuals r;
  for (int l = 1; l <= p.L(); ++l) {
    auto psi = eval_layer(p, l, z.theta, z.u);
    std::vector<double> rho(psi.size());
    double s = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      rho[i] = z.u[l - 1][i] - psi[i];
      s += std::abs(rho[i]);
      r.max_abs = std::max(r.max_abs, std::abs(rho[i]));
    }
    r.rho.push_back(std::move(rho));
    r.l1.push_back(s);
  }
  r.feasible = r.max_abs <= kFeasTol;
  return r;
}

double eval_Theta(const CompositeProblem& p, const Point& z, const std::vector<double>& beta) {
  check_beta(p, beta);
  double v = eval_F(p, z);
  Residuals r = residuals(p, z);
  for (int l = 0; l < p.L(); ++l) v += beta[l] * r.l1[l];
  return v;
}

double eval_objective(const CompositeProblem& p, const std::vector<double>& theta) {
  return eval_F(p, eval_layers(p, theta));
}

std::pair<Point, double> reference_point_and_level(const CompositeProblem& p, const std::vector<double>& beta,
                                                   const std::optional<Point>& feasible) {
  Point z = feasible ? *feasible : eval_layers(p, std::vector<double>(p.n, 0.0));
  return {z, eval_Theta(p, z, beta)};
}

bool g_nonnegative(const CompositeProblem& p, const Point& z) { return eval_g(p, z.u) >= 0.0; }

}  // namespace dstat
