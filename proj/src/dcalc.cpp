#include "dstat/dcalc.hpp"

#include <cmath>
#include <limits>

namespace dstat {

namespace {

std::vector<Jet2> ray(const std::vector<double>& x, const std::vector<double>& d) {
  std::vector<Jet2> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = {x[i], d[i], 0.0};
  return out;
}

std::vector<std::vector<Jet2>> ray(const std::vector<std::vector<double>>& x,
                                   const std::vector<std::vector<double>>& d) {
  std::vector<std::vector<Jet2>> out;
  for (std::size_t l = 0; l < x.size(); ++l) out.push_back(ray(x[l], d[l]));
  return out;
}

DDValue to_dd(const Jet2& j, int order) {
  DDValue r;
  r.value = j.v;
  r.first = j.a;
  if (order >= 2) r.second = j.b;
  return r;
}

void check_order(int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("order must be 1 or 2");
}

Jet2 regularizer(const CompositeProblem& p, const std::vector<double>& theta, const std::vector<double>& dtheta) {
  Jet2 r;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    r.v += theta[i] * theta[i];
    r.a += 2.0 * theta[i] * dtheta[i];
    r.b += 2.0 * dtheta[i] * dtheta[i];
  }
  return {p.lambda * r.v, p.lambda * r.a, p.lambda * r.b};
}

}  // namespace

DDValue dd_expr(const Expr& e, const std::vector<double>& x, const std::vector<double>& d, int order) {
  check_order(order);
  if (x.size() != d.size()) throw DimensionError("point and direction lengths differ");
  auto th = ray(x, d);
  std::vector<std::vector<Jet2>> none;
  JetAlg alg;
  alg.theta = &th;
  alg.u = &none;
  return to_dd(eval(*e, alg), order);
}

DDValue dd_expr(const Expr& e, const Blocks& x, const Blocks& d, int order) {
  check_order(order);
  if (x.theta.size() != d.theta.size() || x.u.size() != d.u.size())
    throw DimensionError("point and direction block structure differ");
  auto th = ray(x.theta, d.theta);
  auto u = ray(x.u, d.u);
  JetAlg alg;
  alg.theta = &th;
  alg.u = &u;
  return to_dd(eval(*e, alg), order);
}

StraightJets straight_jets(const CompositeProblem& p, const Point& z, const Direction& d) {
  check_point(p, z);
  check_point(p, d);
  auto th = ray(z.theta, d.theta);
  auto u = ray(z.u, d.u);
  JetAlg alg;
  alg.theta = &th;
  alg.u = &u;
  StraightJets out;
  for (int l = 1; l <= p.L(); ++l) {
    std::vector<Jet2> comps;
    for (const auto& e : p.layers[l - 1]) comps.push_back(eval(*e, alg));
    out.psi.push_back(std::move(comps));
  }
  out.g = eval(*p.outer, alg);
  out.ties = alg.ties;
  return out;
}

NestedJets nested_jets(const CompositeProblem& p, const std::vector<double>& theta,
                       const std::vector<double>& dtheta) {
  if (static_cast<int>(theta.size()) != p.n || static_cast<int>(dtheta.size()) != p.n)
    throw DimensionError("theta or d_theta has the wrong length");
  auto th = ray(theta, dtheta);
  NestedJets out;
  JetAlg alg;
  alg.theta = &th;
  alg.u = &out.u;
  for (int l = 1; l <= p.L(); ++l) {
    std::vector<Jet2> comps;
    for (const auto& e : p.layers[l - 1]) {
      Jet2 j = eval(*e, alg);
      if (!std::isfinite(j.v)) throw EvalError("non-finite value in layer " + std::to_string(l), l);
      comps.push_back(j);
    }
    out.u.push_back(std::move(comps));
  }
  Jet2 g = eval(*p.outer, alg);
  out.objective = alg.add(g, regularizer(p, theta, dtheta));
  out.ties = alg.ties;
  return out;
}

DDValue dd_Psi(const CompositeProblem& p, const std::vector<double>& theta, const std::vector<double>& dtheta,
               int order) {
  check_order(order);
  return to_dd(nested_jets(p, theta, dtheta).objective, order);
}

DDValue dd_F(const CompositeProblem& p, const Point& z, const Direction& d, int order) {
  check_order(order);
  auto sj = straight_jets(p, z, d);
  Jet2 f = sj.g;
  Jet2 r = regularizer(p, z.theta, d.theta);
  return to_dd({f.v + r.v, f.a + r.a, f.b + r.b}, order);
}

DDValue dd_Theta(const CompositeProblem& p, const Point& z, const Direction& d, const std::vector<double>& beta,
                 int order) {
  check_order(order);
  check_beta(p, beta);
  auto sj = straight_jets(p, z, d);
  Jet2 r = regularizer(p, z.theta, d.theta);
  Jet2 t{sj.g.v + r.v, sj.g.a + r.a, sj.g.b + r.b};
  for (int l = 1; l <= p.L(); ++l) {
    double b = beta[l - 1];
    for (int i = 0; i < p.dims[l - 1]; ++i) {
      const Jet2& psi = sj.psi[l - 1][i];
      Jet2 rho{z.u[l - 1][i] - psi.v, d.u[l - 1][i] - psi.a, -psi.b};
      Jet2 term;
      if (rho.v > kFeasTol) {
        term = rho;
      } else if (rho.v < -kFeasTol) {
        term = {-rho.v, -rho.a, -rho.b};
      } else {
        term.v = std::abs(rho.v);
        term.a = std::abs(rho.a);
        if (near_tie(rho.a, 0.0))
          term.b = std::abs(rho.b);
        else
          term.b = rho.a > 0.0 ? rho.b : -rho.b;
      }
      t.v += b * term.v;
      t.a += b * term.a;
      t.b += b * term.b;
    }
  }
  return to_dd(t, order);
}

int count_ties(const CompositeProblem& p, const Point& z) {
  check_point(p, z);
  ValueAlg alg;
  alg.theta = &z.theta;
  alg.u = &z.u;
  for (const auto& layer : p.layers)
    for (const auto& e : layer) eval(*e, alg);
  eval(*p.outer, alg);
  return alg.ties;
}

IndexSets index_sets(const CompositeProblem& p, const Point& z, const std::optional<Direction>& d) {
  check_point(p, z);
  IndexSets s;
  std::optional<StraightJets> sj;
  if (d) sj = straight_jets(p, z, *d);
  for (int l = 1; l <= p.L(); ++l) {
    auto psi = eval_layer(p, l, z.theta, z.u);
    std::vector<int> pl, mi, ze, zp, zm, zz;
    for (int i = 0; i < p.dims[l - 1]; ++i) {
      double rho = z.u[l - 1][i] - psi[i];
      if (rho > kFeasTol) {
        pl.push_back(i);
      } else if (rho < -kFeasTol) {
        mi.push_back(i);
      } else {
        ze.push_back(i);
        if (sj) {
          double rp = d->u[l - 1][i] - sj->psi[l - 1][i].a;
          if (near_tie(rp, 0.0))
            zz.push_back(i);
          else if (rp > 0.0)
            zp.push_back(i);
          else
            zm.push_back(i);
        }
      }
    }
    s.plus.push_back(pl);
    s.minus.push_back(mi);
    s.zero.push_back(ze);
    s.zero_plus.push_back(zp);
    s.zero_minus.push_back(zm);
    s.zero_zero.push_back(zz);
  }
  return s;
}

namespace {

// Richardson table over a sequence q(tau0 2^-k); picks the entry whose
// successive difference is smallest among entries above the rounding floor.
OracleResult extrapolate(const std::vector<double>& q, const std::vector<double>& taus,
                         const std::vector<double>& noise, double tol) {
  OracleResult best;
  best.error = std::numeric_limits<double>::infinity();
  std::vector<double> prev = q;
  for (int level = 1; level <= 2; ++level) {
    double factor = std::pow(2.0, level);
    std::vector<double> cur;
    for (std::size_t k = 0; k + 1 < prev.size(); ++k) cur.push_back((factor * prev[k + 1] - prev[k]) / (factor - 1.0));
    for (std::size_t k = 0; k + 1 < cur.size(); ++k) {
      double floor = noise[k + level + 1];
      double diff = std::abs(cur[k + 1] - cur[k]);
      bool admissible = floor <= tol * (1.0 + std::abs(cur[k + 1]));
      if (!admissible) diff += floor;
      if (std::isfinite(diff) && diff < best.error) {
        best.error = diff;
        best.value = cur[k + 1];
        best.tau = taus[k + level];
      }
    }
    prev = cur;
  }
  best.converged = best.error <= tol * (1.0 + std::abs(best.value));
  return best;
}

}  // namespace

OracleResult fd_oracle(const ScalarFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& d, int order,
                       const OracleOptions& opt) {
  check_order(order);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double f0 = f(x);
  std::vector<double> q, taus, noise;
  for (int k = 0; k <= opt.halvings; ++k) {
    double t = opt.tau0 * std::ldexp(1.0, -k);
    double v, n;
    if (order == 1) {
      double f1 = f(x + t * d);
      v = (f1 - f0) / t;
      n = 4.0 * eps * (std::abs(f1) + std::abs(f0)) / t;
    } else {
      double f1 = f(x + t * d), f2 = f(x + 2.0 * t * d);
      v = (f2 - 2.0 * f1 + f0) / (t * t);
      n = 4.0 * eps * (std::abs(f2) + 2.0 * std::abs(f1) + std::abs(f0)) / (t * t);
    }
    q.push_back(v);
    taus.push_back(t);
    noise.push_back(n);
  }
  return extrapolate(q, taus, noise, opt.tol);
}

OracleResult path_quotient(const ScalarFn& f, const std::function<double(const Eigen::VectorXd&)>& fprime,
                           const Eigen::VectorXd& x, const std::function<Eigen::VectorXd(double)>& v,
                           const OracleOptions& opt) {
  double f0 = f(x);
  std::vector<double> q, taus, noise;
  for (int k = 0; k <= opt.halvings; ++k) {
    double t = opt.tau0 * std::ldexp(1.0, -k);
    Eigen::VectorXd vt = v(t);
    double f1 = f(x + t * vt);
    q.push_back((f1 - f0 - t * fprime(vt)) / (0.5 * t * t));
    taus.push_back(t);
    noise.push_back(8.0 * std::numeric_limits<double>::epsilon() * (std::abs(f1) + std::abs(f0)) / (t * t));
  }
  return extrapolate(q, taus, noise, opt.tol);
}

SemidiffProbe probe_twice_semidiff(const Expr& e, const std::vector<double>& x, const std::vector<double>& v,
                                   const std::vector<double>& w, double tol) {
  if (x.size() != v.size() || x.size() != w.size()) throw DimensionError("probe: length mismatch");
  SemidiffProbe r;
  r.fixed = *dd_expr(e, x, v, 2).second;
  auto as_std = [](const Eigen::VectorXd& a) { return std::vector<double>(a.data(), a.data() + a.size()); };
  ScalarFn f = [&](const Eigen::VectorXd& y) { return dd_expr(e, as_std(y), std::vector<double>(y.size(), 0.0), 1).value; };
  Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  Eigen::VectorXd vv = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  Eigen::VectorXd ww = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
  auto fprime = [&](const Eigen::VectorXd& dir) { return dd_expr(e, x, as_std(dir), 1).first; };
  r.path_plus = path_quotient(f, fprime, xv, [&](double t) { return Eigen::VectorXd(vv + t * ww); });
  r.path_minus = path_quotient(f, fprime, xv, [&](double t) { return Eigen::VectorXd(vv - t * ww); });
  r.discrepancy = std::abs(r.path_plus.value - r.fixed) > tol || std::abs(r.path_minus.value - r.fixed) > tol;
  return r;
}

}  // namespace dstat
