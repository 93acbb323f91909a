#include "dstat/repro.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "dstat/cones.hpp"
#include "dstat/dcalc.hpp"
#include "dstat/penalty.hpp"
#include "dstat/rnn.hpp"

namespace dstat {

using namespace ex;

CompositeProblem ex2_problem() {
  CompositeProblem p;
  p.n = 1;
  p.dims = {1, 1};
  p.layers = {{param(0)}, {square(input(1, 0))}};
  p.outer = plus(affine({-1.0, 0.5}, 1e-4, {square(input(1, 0)), input(2, 0)}));
  p.lambda = 0.01;
  p.validate();
  return p;
}

CompositeProblem appendix_a_problem() {
  CompositeProblem p;
  p.n = 2;
  p.dims = {1, 1};
  p.layers = {{plus(param(0))}, {diff(constant(1.0), prod(affine({1.0}, 1.0, {param(1)}), input(1, 0)))}};
  p.outer = square(input(2, 0));
  p.lambda = 1.0;
  p.validate();
  return p;
}

BoxProblem example3_box() {
  BoxProblem b;
  b.f = sum({max(constant(-1.0), prod(param(0), param(1))), scale(0.1, sqnorm({param(0), param(1)}))});
  b.lo = {-1.0, -1.0};
  b.hi = {1.0, 1.0};
  return b;
}

Expr appendix_c_expr() { return abs(diff(param(0), prod(param(1), square(param(1))))); }

bool ReproResult::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return !checks.empty();
}

namespace {

class Recorder {
 public:
  explicit Recorder(ReproResult& r) : r_(r) {}

  void near(const std::string& label, double value, double expected, double tol) {
    add(label, value, expected, tol, std::abs(value - expected) <= tol);
  }
  void is(const std::string& label, bool value, bool expected) {
    add(label, value ? 1.0 : 0.0, expected ? 1.0 : 0.0, 0.0, value == expected);
  }
  void below(const std::string& label, double value, double bound) { add(label, value, bound, 0.0, value < bound); }
  void at_most(const std::string& label, double value, double bound) {
    add(label, value, bound, 0.0, value <= bound);
  }
  void at_least(const std::string& label, double value, double bound) {
    add(label, value, bound, 0.0, value >= bound);
  }
  void line(const std::string& s) { r_.lines.push_back(s); }

 private:
  void add(const std::string& label, double value, double expected, double tol, bool pass) {
    r_.checks.push_back({label, value, expected, tol, pass});
    std::ostringstream os;
    os << std::setprecision(12) << (pass ? "ok    " : "FAIL  ") << label << ": " << value;
    r_.lines.push_back(os.str());
  }
  ReproResult& r_;
};

std::string vec_str(const std::vector<double>& v) {
  std::ostringstream os;
  os << std::setprecision(6) << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

bool stationary(const StationarityReport& r) { return r.verdict == Verdict::Stationary; }

void run_example3(Recorder& rec) {
  BoxProblem bp = example3_box();
  auto r1 = check_box_stationarity(bp, {0.0, 0.0}, 1);
  auto r2 = check_box_stationarity(bp, {0.0, 0.0}, 2);
  rec.is("(0,0) first-order stationary", stationary(r1), true);
  rec.is("(0,0) second-order stationary", stationary(r2), false);
  rec.near("(0,0) second-order witness value", r2.witness_value, -1.6, 1e-9);
  if (r2.witness_reduced.size() == 2) {
    rec.near("witness direction d1 + d2", r2.witness_reduced[0] + r2.witness_reduced[1], 0.0, 1e-9);
    rec.line("      witness " + vec_str(r2.witness_reduced));
  }
  for (auto x : {std::vector<double>{-1.0, 1.0}, std::vector<double>{1.0, -1.0}}) {
    auto r = check_box_stationarity(bp, x, 2);
    rec.is(vec_str(x) + " second-order stationary", stationary(r), true);
  }
  auto r3 = check_box_stationarity(bp, {1.0, 1.0}, 1);
  rec.is("(1,1) first-order stationary", stationary(r3), false);
}

void run_ex2(Recorder& rec) {
  CompositeProblem p = ex2_problem();
  std::vector<double> beta{1.0, 0.6};
  Point probe;
  probe.theta = {0.0};
  probe.u = {{0.5}, {0.0}};
  rec.near("Theta(0, 0.5, 0)", eval_Theta(p, probe, beta), 0.65, 1e-12);
  auto [z0, gamma] = reference_point_and_level(p, beta);
  rec.near("gamma_bar", gamma, 1e-4, 1e-15);
  auto d0 = check_d_stationary_P0(p, z0);
  auto d1 = check_d_stationary_P1(p, z0, beta);
  auto sd0 = check_second_order(p, z0, Target::P0, std::nullopt);
  auto sd1 = check_second_order(p, z0, Target::P1, beta);
  rec.is("z0 in D0", stationary(d0), true);
  rec.is("z0 in D1", stationary(d1), true);
  rec.is("z0 in SD0", stationary(sd0), true);
  rec.is("z0 in SD1", stationary(sd1), false);
  if (sd1.witness) {
    rec.near("SD1 witness Theta^(2)", sd1.witness_value, -0.78, 1e-9);
    rec.near("witness d_theta - d_u1", sd1.witness->theta[0] - sd1.witness->u[0][0], 0.0, 1e-12);
    rec.near("witness d_u2", sd1.witness->u[1][0], 0.0, 1e-12);
  } else {
    rec.is("SD1 witness present", false, true);
  }
  Moduli m = estimate_moduli(p, beta, gamma);
  rec.at_most("K_g estimate", m.K_g, 0.5386);
  rec.at_most("K_1 estimate", m.K.at(0), 0.21);
  PenaltyConfig cfg = certify(p, beta, m, gamma);
  rec.below("t_1", cfg.thresholds[0], 1.0);
  rec.below("t_2", cfg.thresholds[1], 0.6);
  rec.is("beta certified", cfg.certified, true);
}

void run_appendix_a(Recorder& rec) {
  CompositeProblem p = appendix_a_problem();
  for (double d1 : {1.0, 0.5, 3.0}) {
    auto dd = dd_Psi(p, {0.0, 0.0}, {d1, 0.0}, 1);
    rec.near("dd_Psi(0; (" + std::to_string(d1).substr(0, 4) + ", 0)) / d1", dd.first / d1, -2.0, 1e-12);
  }
  auto rep = check_d_stationary_P(p, {0.0, 0.0});
  rec.is("theta = 0 d-stationary", stationary(rep), false);
  rec.near("witness derivative", rep.witness_value, -2.0, 1e-12);
  if (!rep.witness_reduced.empty()) rec.line("      witness " + vec_str(rep.witness_reduced));
}

void run_appendix_c(Recorder& rec) {
  Expr h = appendix_c_expr();
  auto pr = probe_twice_semidiff(h, {1.0, 1.0}, {3.0, 1.0}, {4.0, 0.0});
  rec.near("fixed-direction h^(2)((1,1);(3,1))", pr.fixed, 6.0, 1e-9);
  rec.near("path v = (3 + 4t, 1)", pr.path_plus.value, -6.0, 1e-3);
  rec.near("path v = (3 - 4t, 1)", pr.path_minus.value, 6.0, 1e-3);
  rec.is("not twice semidifferentiable (discrepancy)", pr.discrepancy, true);
}

void run_rnn(Recorder& rec) {
  RnnSpec spec = desk_spec();
  RnnThresholds th = rnn_thresholds(spec);
  double ss = 0.0;
  for (const auto& yt : spec.y[0]) ss += yt[0] * yt[0];
  double gy = ss / 6.0;
  double q = std::sqrt(gy / spec.lambda);
  rec.near("gamma_y", th.gamma_y, gy, 1e-15);
  rec.near("t_1", th.t1, (1.0 + q + q * q) * gy * std::sqrt(2.0 / (3.0 * spec.lambda)), 1e-12);
  rec.near("t_2", th.t2, std::sqrt(2.0 * gy / 3.0), 1e-12);
  SolveConfig sc;
  sc.init = InitPolicy::Random;
  RnnReport rep = train_and_certify(spec, std::nullopt, sc);
  rec.line("      solver: " + rep.trace.reason + " after " + std::to_string(rep.trace.iterations) + " iterations");
  rec.is("beta certified", rep.cfg.certified, true);
  rec.at_least("probe minimum", rep.probe_min, -1e-6);
  rec.at_most("final residual", rep.max_residual, 1e-5);
  rec.is("D0 agrees with D1", rep.relation.in_D0 == rep.relation.in_D1, true);
  rec.line(std::string("      solved point in D1: ") + (rep.relation.in_D1 ? "yes" : "no"));
  rec.is("SD0 agrees with D0", rep.relation.in_SD0 == rep.relation.in_D0, true);
  rec.is("SD1 agrees with D1", rep.relation.in_SD1 == rep.relation.in_D1, true);
  rec.is("no set-relation violations", rep.relation.consistent, true);
}

}  // namespace

std::vector<std::string> repro_names() { return {"example3", "ex2", "appendix-a", "appendix-c", "rnn"}; }

ReproResult run_repro(const std::string& name) {
  ReproResult r;
  r.name = name;
  Recorder rec(r);
  auto start = std::chrono::steady_clock::now();
  if (name == "example3")
    run_example3(rec);
  else if (name == "ex2")
    run_ex2(rec);
  else if (name == "appendix-a")
    run_appendix_a(rec);
  else if (name == "appendix-c")
    run_appendix_c(rec);
  else if (name == "rnn")
    run_rnn(rec);
  else
    throw std::invalid_argument("unknown scenario '" + name + "'");
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace dstat
