// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dstat/cones.hpp"
#include "dstat/dcalc.hpp"
#include "dstat/penalty.hpp"
#include "dstat/repro.hpp"
#include "dstat/rnn.hpp"
#include "dstat/solver.hpp"
#include "dstat/stationarity.hpp"
#include "oracles.hpp"
#include "random_exprs.hpp"

using namespace dstat;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::vector<double> as_std(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Outcome box_example() {
  Outcome o;
  BoxProblem bp = example3_box();
  auto r1 = check_box_stationarity(bp, {0.0, 0.0}, 1);
  auto r2 = check_box_stationarity(bp, {0.0, 0.0}, 2);
  o.require(r1.verdict == Verdict::Stationary, "(0,0) first-order");
  o.require(r2.verdict == Verdict::NotStationary, "(0,0) second-order verdict");
  o.require(near(r2.witness_value, -1.6, 1e-9), "witness value " + num(r2.witness_value));
  o.require(r2.witness_reduced.size() == 2 && near(r2.witness_reduced[0], -r2.witness_reduced[1], 1e-12) &&
                near(std::abs(r2.witness_reduced[0]), 1.0, 1e-12),
            "witness direction not along (1,-1)");
  for (auto x : {std::vector<double>{-1.0, 1.0}, std::vector<double>{1.0, -1.0}})
    o.require(check_box_stationarity(bp, x, 2).verdict == Verdict::Stationary, "corner second-order");
  return o;
}

Outcome ex2_example() {
  Outcome o;
  CompositeProblem p = ex2_problem();
  std::vector<double> beta{1.0, 0.6};
  auto [z0, gamma] = reference_point_and_level(p, beta);
  o.require(check_d_stationary_P0(p, z0).verdict == Verdict::Stationary, "z0 in D0");
  o.require(check_d_stationary_P1(p, z0, beta).verdict == Verdict::Stationary, "z0 in D1");
  o.require(check_second_order(p, z0, Target::P0, std::nullopt).verdict == Verdict::Stationary, "z0 in SD0");
  auto sd1 = check_second_order(p, z0, Target::P1, beta);
  o.require(sd1.verdict == Verdict::NotStationary, "z0 not in SD1");
  if (sd1.witness) {
    double t = sd1.witness->theta[0];
    o.require(t != 0.0 && near(sd1.witness->u[0][0], t, 1e-12) && sd1.witness->u[1][0] == 0.0,
              "witness not of the form (t,t,0)");
    o.require(near(sd1.witness_value, -0.78 * t * t, 1e-9), "Theta'' " + num(sd1.witness_value));
  } else {
    o.require(false, "no SD1 witness");
  }
  Moduli m = estimate_moduli(p, beta, gamma);
  o.require(m.K_g <= 0.5386, "K_g " + num(m.K_g));
  o.require(m.K.at(0) <= 0.21, "K_1 " + num(m.K[0]));
  PenaltyConfig c = certify(p, beta, m, gamma);
  o.require(c.thresholds[0] < 1.0, "t_1 " + num(c.thresholds[0]));
  o.require(c.thresholds[1] < 0.6, "t_2 " + num(c.thresholds[1]));
  return o;
}

Outcome relu_gate() {
  Outcome o;
  CompositeProblem p = appendix_a_problem();
  for (double d1 : {1e-3, 0.5, 1.0, 7.0}) {
    double v = dd_Psi(p, {0.0, 0.0}, {d1, 0.0}, 1).first;
    o.require(v == -2.0 * d1, "dd_Psi(" + num(d1) + ") = " + num(v));
  }
  auto r = check_d_stationary_P(p, {0.0, 0.0});
  o.require(r.verdict == Verdict::NotStationary, "verdict");
  o.require(near(r.witness_value, -2.0, 1e-12), "witness derivative " + num(r.witness_value));
  return o;
}

Outcome moving_direction() {
  Outcome o;
  auto pr = probe_twice_semidiff(appendix_c_expr(), {1.0, 1.0}, {3.0, 1.0}, {4.0, 0.0});
  o.require(near(pr.fixed, 6.0, 1e-9), "fixed " + num(pr.fixed));
  o.require(near(pr.path_plus.value, -6.0, 1e-3), "path + " + num(pr.path_plus.value));
  o.require(near(pr.path_minus.value, 6.0, 1e-3), "path - " + num(pr.path_minus.value));
  o.require(pr.discrepancy, "discrepancy not reported");
  return o;
}

// Random composite problem: layer 1 from random parameter expressions, layer 2
// nonsmooth maps of layer 1, g a nonsmooth outer function.
CompositeProblem random_problem(std::mt19937_64& rng, gen::ExprGen& g) {
  using namespace ex;
  CompositeProblem p;
  p.n = 3;
  p.dims = {2, 2};
  p.layers.push_back({g.make(2), g.make(2)});
  std::uniform_int_distribution<int> pick(0, 3);
  std::vector<Expr> l2;
  for (int i = 0; i < 2; ++i) {
    switch (pick(rng)) {
      case 0:
        l2.push_back(leaky(affine({1.0, -1.0}, 0.0, {input(1, 0), input(1, 1)}), 0.3));
        break;
      case 1:
        l2.push_back(max(prod(param(i), input(1, i)), input(1, 1 - i)));
        break;
      case 2:
        l2.push_back(abs(diff(input(1, i), square(param(2)))));
        break;
      default:
        l2.push_back(plus(inner({input(1, 0), param(0)}, {input(1, 1), param(1)})));
    }
  }
  p.layers.push_back(l2);
  p.outer = sum({sqnorm({input(2, 0), input(1, 1)}), plus(diff(input(2, 1), constant(0.5))), abs(input(1, 0))});
  p.lambda = 0.1;
  p.validate();
  return p;
}

void collect_ops(const Expr& e, std::set<Op>& seen) {
  seen.insert(e->op);
  for (const auto& a : e->args) collect_ops(a, seen);
}

Outcome oracle_agreement(int& instances) {
  Outcome o;
  gen::ExprGen g(3, 2024);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::set<Op> seen;
  int failures = 0;
  auto compare = [&](const ScalarFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& d, const DDValue& dd) {
    auto q1 = fd_oracle(f, x, d, 1);
    bool ok = std::abs(dd.first - q1.value) <= 1e-5 * (1.0 + std::abs(dd.first));
    double fd2 = 0.0;
    if (dd.second) {
      fd2 = fd_oracle(f, x, d, 2).value;
      ok = ok && std::abs(*dd.second - fd2) <= 1e-5 * (1.0 + std::abs(*dd.second));
    }
    if (!ok && ++failures <= 3)
      o.detail += "[#" + std::to_string(instances) + " dd " + num(dd.first) + "/" + num(dd.second.value_or(0.0)) +
                  " fd " + num(q1.value) + "/" + num(fd2) + "] ";
    ++instances;
  };
  // Scalar expressions at grid points, where kinks are common.
  for (int k = 0; k < 120; ++k) {
    Expr e = g.make(3);
    collect_ops(e, seen);
    auto x = g.grid_point();
    auto d = g.direction();
    ScalarFn f = [&](const Eigen::VectorXd& y) { return dd_expr(e, as_std(y), std::vector<double>(3, 0.0), 1).value; };
    compare(f, Eigen::Map<Eigen::VectorXd>(x.data(), 3), Eigen::Map<Eigen::VectorXd>(d.data(), 3),
            dd_expr(e, x, d, 2));
  }
  // Penalty and lifted objectives of composite problems at (possibly infeasible) points.
  for (int k = 0; k < 40; ++k) {
    CompositeProblem p = random_problem(rng, g);
    for (const auto& layer : p.layers)
      for (const auto& e : layer) collect_ops(e, seen);
    collect_ops(p.outer, seen);
    std::vector<double> beta{1.0, 2.0};
    Point z = zeros_like(p);
    for (auto& v : z.theta) v = std::round(2.0 * uni(rng));
    if (k % 2 == 0) {
      z = eval_layers(p, z.theta);
    } else {
      for (auto& b : z.u)
        for (auto& v : b) v = std::round(2.0 * uni(rng));
    }
    Direction d = zeros_like(p);
    for (auto& v : d.theta) v = uni(rng);
    for (auto& b : d.u)
      for (auto& v : b) v = uni(rng);
    ScalarFn f = [&](const Eigen::VectorXd& y) { return eval_Theta(p, unflatten(p, y), beta); };
    compare(f, flatten(p, z), flatten(p, d), dd_Theta(p, z, d, beta, 2));
    ScalarFn fp = [&](const Eigen::VectorXd& y) { return eval_objective(p, as_std(y)); };
    compare(fp, Eigen::Map<Eigen::VectorXd>(z.theta.data(), 3), Eigen::Map<Eigen::VectorXd>(d.theta.data(), 3),
            dd_Psi(p, z.theta, d.theta, 2));
  }
  o.require(failures == 0, std::to_string(failures) + " disagreements");
  o.require(instances >= 100, "only " + std::to_string(instances) + " instances");
  for (Op op : {Op::Const, Op::Param, Op::Input, Op::Sum, Op::Diff, Op::Scale, Op::Prod, Op::Inner, Op::SqNorm,
                Op::Affine, Op::Max, Op::Abs, Op::Plus, Op::Leaky, Op::Square})
    o.require(seen.count(op) == 1, std::string("primitive not exercised: ") + op_name(op));
  return o;
}

Outcome tangent_cones() {
  Outcome o;
  RnnSpec s = desk_spec();
  CompositeProblem p = build_problem(s);
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> th(p.n);
  for (auto& v : th) v = 0.5 * gauss(rng);
  Point z = eval_layers(p, th);
  int lifted_ok = 0, perturbed_ok = 0;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> dt(p.n);
    for (auto& v : dt) v = gauss(rng);
    Direction d = lift_direction(p, z, dt);
    auto m = tangent_membership(p, z, d);
    lifted_ok += m.in_tangent && m.max_violation <= 1e-12;

    int layer = 1 + k % p.L();
    int comp = static_cast<int>(rng() % static_cast<std::uint64_t>(p.dims[layer - 1]));
    d.u[layer - 1][comp] += 0.1 + std::abs(gauss(rng));
    auto q = tangent_membership(p, z, d);
    bool localized = !q.in_tangent && std::abs(q.violation[layer - 1][comp]) > 0.1 - 1e-12;
    for (int l = 1; l < layer; ++l)
      for (double v : q.violation[l - 1]) localized = localized && std::abs(v) <= 1e-12;
    for (int i = 0; i < p.dims[layer - 1]; ++i)
      if (i != comp) localized = localized && std::abs(q.violation[layer - 1][i]) <= 1e-12;
    perturbed_ok += localized;
  }
  o.require(lifted_ok == 100, std::to_string(lifted_ok) + "/100 lifted directions accepted");
  o.require(perturbed_ok == 100, std::to_string(perturbed_ok) + "/100 perturbations rejected and localized");

  // Pure ReLU network with three parameters, evaluated at a point where all gates sit at kinks.
  using namespace ex;
  CompositeProblem r;
  r.n = 3;
  r.dims = {2, 1};
  r.layers = {{plus(param(0)), plus(diff(param(1), param(2)))}, {plus(diff(input(1, 0), input(1, 1)))}};
  r.outer = square(input(2, 0));
  r.lambda = 1.0;
  r.validate();
  Point zr = eval_layers(r, {0.0, 0.5, 0.5});
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  int agree = 0, tangent = 0;
  const int total = 10000;
  for (int k = 0; k < total; ++k) {
    Direction d = zeros_like(r);
    for (auto& v : d.theta) v = uni(rng);
    if (k % 2 == 0) {
      d = lift_direction(r, zr, d.theta);
      if (k % 4 == 0) d.u[k % 8 == 0 ? 0 : 1][0] += 1e-3 * uni(rng);
    } else {
      for (auto& b : d.u)
        for (auto& v : b) v = uni(rng);
    }
    auto m = tangent_membership(r, zr, d);
    bool predicted = m.in_tangent && m.in_radial.value_or(false);
    bool grid = tau_grid_feasible(r, zr, d);
    agree += predicted == grid;
    if (predicted != grid && agree + 3 > k)
      o.detail += "[k=" + std::to_string(k) + " tangent " + std::to_string(m.in_tangent) + " viol " +
                  num(m.max_violation) + " grid " + std::to_string(grid) + "] ";
    tangent += m.in_tangent;
  }
  o.require(agree == total, std::to_string(total - agree) + " tau-grid disagreements");
  o.require(tangent > 0 && tangent < total, "degenerate direction sample");
  return o;
}

Outcome rnn_end_to_end() {
  Outcome o;
  SolveConfig cfg;
  cfg.init = InitPolicy::Random;
  RnnReport r = train_and_certify(desk_spec(), std::nullopt, cfg);
  o.require(r.cfg.certified, "beta not certified");
  o.require(r.probe_min >= -1e-6, "probe " + num(r.probe_min));
  o.require(r.max_residual <= 1e-5, "residual " + num(r.max_residual));
  o.require(r.relation.in_D0 == r.relation.in_D1, "P0/P1 first-order disagree");
  o.require(r.relation.in_SD0 == r.relation.in_D0, "SD0 differs from D0");
  o.require(r.relation.in_SD1 == r.relation.in_D1, "SD1 differs from D1");
  return o;
}

Outcome threshold_formulas() {
  Outcome o;
  for (std::uint64_t seed : {2024u, 1u, 17u}) {
    RnnSpec s = desk_spec(seed);
    double ss = 0.0;
    for (const auto& yt : s.y[0]) ss += yt[0] * yt[0];
    auto ref = oracle::rnn_thresholds(ss, s.lambda, 1, 3);
    RnnThresholds t = rnn_thresholds(s);
    o.require(near(t.t1, ref.t1, 1e-12), "t1 " + num(t.t1) + " vs " + num(ref.t1));
    o.require(near(t.t2, ref.t2, 1e-12), "t2 " + num(t.t2) + " vs " + num(ref.t2));
  }
  for (double kg : {0.0, 0.37, 12.5}) {
    auto t = thresholds(kg, {});
    o.require(t.size() == 1 && t[0] == kg, "L = 1 threshold");
  }
  return o;
}

// Infeasible points of lev Theta: perturb u off a lifted point while Theta stays below gamma.
std::vector<Point> infeasible_level_points(const CompositeProblem& p, const std::vector<double>& beta, double gamma,
                                           int count, std::uint64_t seed) {
  std::vector<Point> out;
  for (const auto& z : sample_level_set(p, beta, gamma, 4 * count, seed))
    if (!residuals(p, z).feasible && static_cast<int>(out.size()) < count) out.push_back(z);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double scale = std::sqrt(gamma / p.lambda / p.n);
  for (int a = 0; a < 20000 && static_cast<int>(out.size()) < count; ++a) {
    if (a % 50 == 49) scale *= 0.8;
    std::vector<double> th(p.n);
    for (auto& v : th) v = scale * gauss(rng);
    Point z = eval_layers(p, th);
    if (eval_Theta(p, z, beta) > gamma) continue;
    for (double nu = 0.1 * scale; nu > 1e-8; nu *= 0.5) {
      Point w = z;
      int layer = static_cast<int>(rng() % static_cast<std::uint64_t>(p.L()));
      for (auto& v : w.u[layer]) v += nu * gauss(rng);
      if (eval_Theta(p, w, beta) <= gamma && !residuals(p, w).feasible) {
        out.push_back(w);
        break;
      }
    }
  }
  return out;
}

Outcome constructive_descent(int& tested) {
  Outcome o;
  int failures = 0;
  auto run = [&](const CompositeProblem& p, const std::vector<double>& beta, int count, std::uint64_t seed) {
    PenaltyConfig c = make_penalty_config(p, beta);
    o.require(c.certified, "instance not certified");
    auto pts = infeasible_level_points(p, beta, c.gamma_bar, count, seed);
    o.require(static_cast<int>(pts.size()) == count, "only " + std::to_string(pts.size()) + " level-set points");
    for (const auto& z : pts) {
      Direction d = lemma34_direction(p, z);
      if (!(dd_Theta(p, z, d, beta, 1).first < 0.0)) ++failures;
      ++tested;
    }
  };
  run(ex2_problem(), {1.0, 0.6}, 25, 5);
  RnnSpec s = desk_spec();
  CompositeProblem p = build_problem(s);
  RnnThresholds t = rnn_thresholds(s);
  std::vector<double> beta(p.L());
  for (int l = 1; l <= p.L(); ++l) beta[l - 1] = 1.05 * (l <= 2 * s.T ? t.t1 : t.t2);
  run(p, beta, 25, 6);
  o.require(failures == 0, std::to_string(failures) + " directions without descent");
  return o;
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn, double limit) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o = fn();
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit > 0.0 && secs >= limit) o.require(false, "runtime " + num(secs) + " s over " + num(limit) + " s");
    if (!o.pass) ++failed;
    std::printf("%s %d %s (%.3f s)%s%s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
                o.detail.empty() ? "" : ": ", o.detail.c_str());
    std::fflush(stdout);
  };
  int instances = 0, tested = 0;
  report(1, "box example second-order witness", box_example, 1.0);
  report(2, "lifted vs penalized second-order split", ex2_example, 5.0);
  report(3, "ReLU gate derivative -2 d1", relu_gate, 0.0);
  report(4, "moving-direction quotients", moving_direction, 0.0);
  report(5, "oracle agreement", [&] { return oracle_agreement(instances); }, 0.0);
  report(6, "tangent-cone property", tangent_cones, 0.0);
  report(7, "exact penalty end-to-end on the RNN desk instance", rnn_end_to_end, 60.0);
  report(8, "threshold formulas", threshold_formulas, 0.0);
  report(9, "constructive descent from infeasible level-set points", [&] { return constructive_descent(tested); },
         0.0);
  std::printf("oracle instances: %d, descent points: %d\n", instances, tested);
  return failed == 0 ? 0 : 1;
}
