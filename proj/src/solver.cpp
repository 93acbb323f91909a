#include "dstat/solver.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <stdexcept>

#include "dstat/cones.hpp"
#include "dstat/dcalc.hpp"
#include "dstat/penalty.hpp"
#include "dstat/stationarity.hpp"

namespace dstat {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
constexpr double kSigma = 1e-4;

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<long>(v.size()));
}

// Gradient of Psi + lambda|.|^2 on the default branch at ties.
Vec nested_gradient(const CompositeProblem& p, const std::vector<double>& theta) {
  LinAlg alg;
  alg.m = p.n;
  std::vector<Lin> th;
  for (int i = 0; i < p.n; ++i) {
    Vec e = Vec::Zero(p.n);
    e[i] = 1.0;
    th.push_back({theta[i], e});
  }
  std::vector<std::vector<Lin>> u;
  alg.theta = &th;
  alg.u = &u;
  for (int l = 1; l <= p.L(); ++l) {
    std::vector<Lin> comps;
    for (const auto& e : p.layers[l - 1]) comps.push_back(eval(*e, alg));
    u.push_back(std::move(comps));
  }
  Vec g = eval(*p.outer, alg).c;
  for (int i = 0; i < p.n; ++i) g[i] += 2.0 * p.lambda * theta[i];
  return g;
}

double objective(const CompositeProblem& p, const Vec& theta) { return eval_objective(p, to_std(theta)); }

double dir_deriv(const CompositeProblem& p, const Vec& theta, const Vec& d) {
  return dd_Psi(p, to_std(theta), to_std(d), 1).first;
}

// A level-set sample; when rejection fails, a perturbed lift at a shrinking scale.
Point random_start(const CompositeProblem& p, const std::vector<double>& beta, std::uint64_t seed) {
  auto [z0, gamma] = reference_point_and_level(p, beta);
  auto pts = sample_level_set(p, beta, gamma, 1, seed);
  if (!pts.empty()) return pts.front();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double scale = std::sqrt(gamma / p.lambda / std::max(p.n, 1));
  for (int attempt = 0; attempt < 400; ++attempt) {
    if (attempt % 20 == 19) scale *= 0.7;
    std::vector<double> th(p.n);
    for (auto& v : th) v = scale * gauss(rng);
    Point lifted = eval_layers(p, th);
    if (eval_Theta(p, lifted, beta) > gamma) continue;
    // Leave the feasible set when the level allows it.
    for (double nu = 0.1 * scale; nu > 1e-6 * scale; nu *= 0.5) {
      Point z = lifted;
      for (auto& b : z.u)
        for (auto& v : b) v += nu * gauss(rng);
      if (eval_Theta(p, z, beta) <= gamma) return z;
    }
    return lifted;
  }
  return z0;
}

}  // namespace

StepRule step_rule_from_name(const std::string& s) {
  if (s == "armijo") return StepRule::Armijo;
  if (s == "fixed") return StepRule::Fixed;
  if (s == "diminishing") return StepRule::Diminishing;
  throw std::invalid_argument("unknown step rule '" + s + "' (expected armijo, fixed or diminishing)");
}

InitPolicy init_policy_from_name(const std::string& s) {
  if (s == "zero") return InitPolicy::Zero;
  if (s == "random") return InitPolicy::Random;
  if (s == "file" || s == "user") return InitPolicy::User;
  throw std::invalid_argument("unknown init policy '" + s + "' (expected zero, random or file)");
}

PolishResult polish_to_feasible(const CompositeProblem& p, const Point& z, const std::vector<double>& beta) {
  check_point(p, z);
  PolishResult r;
  r.z = z;
  if (residuals(p, z).feasible) return r;
  Point lifted = eval_layers(p, z.theta);
  double before = eval_Theta(p, z, beta);
  double after = eval_Theta(p, lifted, beta);
  if (after <= before) {
    r.z = std::move(lifted);
    r.lifted = true;
    r.theta_change = after - before;
  }
  return r;
}

double probe_min(const CompositeProblem& p, const Point& z, const std::vector<double>& beta, int count,
                 std::uint64_t seed, const std::vector<Direction>& extra) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  bool feasible = residuals(p, z).feasible;
  double best = std::numeric_limits<double>::infinity();
  auto test = [&](const Direction& d) {
    double s = max_abs(d);
    if (!(s > 0.0)) return;
    best = std::min(best, dd_Theta(p, z, axpy(1.0 / s - 1.0, d, d), beta, 1).first);
  };
  for (const auto& d : extra) test(d);
  for (int k = 0; k < count; ++k) {
    if (feasible && k % 2 == 0) {
      std::vector<double> dt(p.n);
      for (auto& v : dt) v = gauss(rng);
      test(lift_direction(p, z, dt));
    } else {
      Direction d = zeros_like(p);
      for (auto& v : d.theta) v = uni(rng);
      for (auto& b : d.u)
        for (auto& v : b) v = uni(rng);
      test(d);
    }
  }
  return best;
}

std::pair<Point, SolveTrace> minimize_theta(const CompositeProblem& p, const std::vector<double>& beta,
                                            const SolveConfig& cfg) {
  check_beta(p, beta);
  if (cfg.max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (!(cfg.stop_tol > 0.0)) throw std::invalid_argument("stop tolerance must be positive");
  if (!(cfg.step > 0.0)) throw std::invalid_argument("step must be positive");

  Point z;
  switch (cfg.init) {
    case InitPolicy::Zero:
      z = eval_layers(p, std::vector<double>(p.n, 0.0));
      break;
    case InitPolicy::Random:
      z = random_start(p, beta, cfg.seed);
      break;
    case InitPolicy::User:
      if (!cfg.init_point) throw std::invalid_argument("init policy 'file' needs an initial point");
      z = *cfg.init_point;
      check_point(p, z);
      break;
  }

  SolveTrace tr;
  int iter = 0;
  double theta_val = eval_Theta(p, z, beta);
  auto record = [&](double step) {
    tr.rows.push_back({iter, theta_val, residuals(p, z).max_abs, step});
  };
  record(0.0);

  // Infeasible start: lift when it helps, otherwise correct one layer at a time.
  while (!residuals(p, z).feasible && iter < cfg.max_iters) {
    auto pol = polish_to_feasible(p, z, beta);
    ++iter;
    if (pol.lifted) {
      z = pol.z;
      theta_val = eval_Theta(p, z, beta);
      record(0.0);
      break;
    }
    Direction d = lemma34_direction(p, z);
    double slope = dd_Theta(p, z, d, beta, 1).first;
    bool moved = false;
    double t = 1.0;
    for (int h = 0; h < 60 && slope < 0.0; ++h, t *= 0.5) {
      Point zn = axpy(t, d, z);
      double vn = eval_Theta(p, zn, beta);
      if (vn <= theta_val + kSigma * t * slope) {
        z = std::move(zn);
        theta_val = vn;
        moved = true;
        break;
      }
    }
    if (!moved) {
      tr.reason = "stalled";
      tr.final = z;
      tr.iterations = iter;
      tr.probe_min = probe_min(p, z, beta, cfg.probe_dirs, cfg.seed);
      return {z, tr};
    }
    record(t);
  }
  if (!residuals(p, z).feasible) {
    tr.reason = "budget";
    tr.budget_exhausted = true;
    tr.final = z;
    tr.iterations = iter;
    tr.probe_min = probe_min(p, z, beta, cfg.probe_dirs, cfg.seed);
    return {z, tr};
  }

  // Feasible phase: quasi-Newton descent on theta with z = eval_layers(theta).
  Vec theta = to_vec(z.theta);
  double f = objective(p, theta);
  Vec g = nested_gradient(p, z.theta);
  Mat H = Mat::Identity(p.n, p.n);
  int k = 0;
  CheckOptions chk;
  chk.tol = 0.0;
  chk.seed = cfg.seed;
  while (true) {
    Vec d_grad = -g;
    std::vector<Direction> extra;
    if (d_grad.lpNorm<Eigen::Infinity>() > 0.0) extra.push_back(lift_direction(p, z, to_std(d_grad)));
    double pm = probe_min(p, z, beta, cfg.probe_dirs, cfg.seed + static_cast<std::uint64_t>(k), extra);
    tr.probe_min = pm;
    if (pm >= -cfg.stop_tol) {
      tr.reason = "converged";
      break;
    }
    if (iter >= cfg.max_iters) {
      tr.reason = "budget";
      tr.budget_exhausted = true;
      break;
    }
    Vec d = -H * g;
    double slope = dir_deriv(p, theta, d);
    if (!(slope < 0.0)) {
      H.setIdentity();
      d = d_grad;
      slope = dir_deriv(p, theta, d);
    }
    if (!(slope < 0.0)) {
      auto rep = check_d_stationary_P(p, to_std(theta), chk);
      if (rep.verdict != Verdict::NotStationary) {
        tr.reason = "converged";
        break;
      }
      d = to_vec(rep.witness_reduced);
      slope = rep.witness_value;
    }
    double t0 = cfg.step;
    if (cfg.rule == StepRule::Diminishing) t0 = cfg.step / std::sqrt(static_cast<double>(k + 1));
    double t = t0;
    bool accepted = false;
    Vec theta_new;
    double f_new = f;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      theta_new = theta + t * d;
      f_new = objective(p, theta_new);
      if (f_new <= f + kSigma * t * slope) {
        accepted = true;
        break;
      }
      // Below the rounding floor of f, accept a full step that does not raise f.
      if (h == 0 && f_new <= f && std::abs(f_new - f) <= 1e-14 * std::max(1.0, std::abs(f))) {
        Vec gn = nested_gradient(p, to_std(theta_new));
        if (gn.norm() < g.norm()) {
          accepted = true;
          break;
        }
      }
    }
    ++iter;
    ++k;
    if (!accepted) {
      if (!H.isIdentity()) {
        H.setIdentity();
        --iter;
        continue;
      }
      tr.reason = "stalled";
      break;
    }
    Vec g_new = nested_gradient(p, to_std(theta_new));
    Vec s = theta_new - theta;
    Vec yv = g_new - g;
    double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      double rho = 1.0 / sy;
      Mat I = Mat::Identity(p.n, p.n);
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    theta = theta_new;
    f = f_new;
    g = g_new;
    z = eval_layers(p, to_std(theta));
    theta_val = eval_Theta(p, z, beta);
    record(t);
  }
  tr.final = z;
  tr.iterations = iter;
  return {z, tr};
}

void write_trace_csv(std::ostream& os, const SolveTrace& tr) {
  os << "iter,theta,max_residual,step\n";
  os << std::setprecision(17);
  for (const auto& r : tr.rows) os << r.iter << ',' << r.theta << ',' << r.max_residual << ',' << r.step << '\n';
}

}  // namespace dstat
