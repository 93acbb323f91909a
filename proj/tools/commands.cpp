#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "dstat/cones.hpp"
#include "dstat/dcalc.hpp"
#include "dstat/io.hpp"
#include "dstat/penalty.hpp"
#include "dstat/repro.hpp"
#include "dstat/rnn.hpp"
#include "dstat/solver.hpp"
#include "dstat/stationarity.hpp"

namespace dstat::cli {

namespace {

constexpr int kSchemaVersion = 1;

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

// Collects input hashes and timing for the report manifest.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

  std::string read(const std::string& path) {
    std::string text = read_text_file(path);
    inputs_.push_back({{"path", path}, {"sha256", sha256_hex(text)}});
    return text;
  }
  json read_json(const std::string& path) {
    std::string text = read(path);
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(path + ": " + e.what());
    }
  }
  void seed(std::uint64_t s) { seed_ = s; }

  json to_json() const {
    json j{{"command", command_},
           {"inputs", inputs_},
           {"tool_version", DSTAT_VERSION},
           {"wall_time", std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()}};
    j["seed"] = seed_ ? json(*seed_) : json(nullptr);
    return j;
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  json inputs_ = json::array();
  std::optional<std::uint64_t> seed_;
};

json finite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void emit(const json& body, const Manifest& m, const std::string& out) {
  json j = body;
  j["schema_version"] = kSchemaVersion;
  j["manifest"] = m.to_json();
  std::string text = j.dump(2) + "\n";
  if (out.empty())
    std::cout << text;
  else
    write_text_file(out, text);
}

CompositeProblem load_problem(Manifest& m, const std::string& path) {
  std::string text = m.read(path);
  return parse_problem(text);
}

Blocks load_blocks(Manifest& m, const std::string& path) { return blocks_from_json(m.read_json(path)); }

std::vector<double> resolve_beta(const CompositeProblem& p, const std::vector<double>& cli, bool required) {
  if (!cli.empty()) {
    check_beta(p, cli);
    return cli;
  }
  if (p.beta) return *p.beta;
  if (required) throw std::invalid_argument("beta is required: pass --beta or include it in the problem file");
  return {};
}

json report_json(const StationarityReport& r) {
  json j{{"target", target_name(r.target)},
         {"order", r.order},
         {"verdict", verdict_name(r.verdict)},
         {"mode", r.mode},
         {"min_value", finite(r.min_value)},
         {"pieces", r.pieces},
         {"samples", r.samples},
         {"tol", r.tol},
         {"note", r.note}};
  if (r.witness) {
    j["witness"] = blocks_to_json(*r.witness);
    j["witness_value"] = finite(r.witness_value);
  } else {
    j["witness"] = nullptr;
  }
  if (!r.witness_reduced.empty()) j["witness_reduced"] = r.witness_reduced;
  return j;
}

json membership_json(const ConeMembership& m) {
  json j{{"in_tangent", m.in_tangent},
         {"max_violation", m.max_violation},
         {"worst_layer", m.worst_layer},
         {"violation", m.violation}};
  if (m.in_radial)
    j["in_radial"] = *m.in_radial;
  else
    j["in_radial"] = m.in_tangent ? json("unknown") : json(nullptr);
  return j;
}

json penalty_json(const PenaltyConfig& c) {
  std::vector<double> suggest;
  for (double t : c.thresholds) suggest.push_back(t > 0.0 ? 1.05 * t : 1e-6);
  return {{"K_g", c.K_g},     {"K", c.K},           {"thresholds", c.thresholds}, {"beta", c.beta},
          {"certified", c.certified}, {"gamma_bar", c.gamma_bar}, {"eps", c.eps},
          {"heuristic", c.heuristic}, {"method", c.method}, {"suggested_beta", suggest}};
}

json relation_json(const SetRelation& r) {
  return {{"feasible", r.feasible}, {"in_level_set", r.in_level_set}, {"D0", r.in_D0},
          {"D1", r.in_D1},          {"SD0", r.in_SD0},                {"SD1", r.in_SD1},
          {"violations", r.violations}, {"consistent", r.consistent}};
}

json rnn_thresholds_json(const RnnThresholds& t) {
  return {{"gamma_y", t.gamma_y}, {"gamma_1", t.gamma_1}, {"t1", t.t1},   {"t2", t.t2},
          {"K_g", t.K_g},         {"K_W", t.K_W},         {"K_V", t.K_V}, {"K_activation", t.K_act}};
}

void check_expectation(const std::string& expect, Verdict v) {
  if (expect.empty()) return;
  if (expect != "stationary" && expect != "not-stationary")
    throw std::invalid_argument("--expect must be 'stationary' or 'not-stationary'");
  if (expect != verdict_name(v))
    throw Exit(kUnexpectedVerdict, std::string("expected ") + expect + ", got " + verdict_name(v));
}

// ---- subcommands -------------------------------------------------------------

struct EvalArgs {
  std::string problem, point, out, emit_problem;
  std::vector<double> beta;
};

void run_eval(const EvalArgs& a) {
  Manifest m("eval");
  CompositeProblem p = load_problem(m, a.problem);
  if (!a.emit_problem.empty()) write_text_file(a.emit_problem, serialize_problem(p));
  json body{{"n", p.n}, {"L", p.L()}, {"dims", p.dims}, {"lambda", p.lambda}};
  Point z = a.point.empty() ? eval_layers(p, std::vector<double>(p.n, 0.0)) : load_blocks(m, a.point);
  check_point(p, z);
  Residuals r = residuals(p, z);
  body["F"] = eval_F(p, z);
  body["objective"] = eval_objective(p, z.theta);
  body["residual_max"] = r.max_abs;
  body["residual_l1"] = r.l1;
  body["feasible"] = r.feasible;
  body["g_nonnegative"] = g_nonnegative(p, z);
  auto beta = resolve_beta(p, a.beta, false);
  if (!beta.empty()) body["Theta"] = eval_Theta(p, z, beta);
  emit(body, m, a.out);
}

struct DderivArgs {
  std::string problem, point, direction, target = "F", out;
  std::vector<double> beta;
  int order = 2;
  bool oracle = false;
};

void run_dderiv(const DderivArgs& a) {
  Manifest m("dderiv");
  CompositeProblem p = load_problem(m, a.problem);
  Point z = load_blocks(m, a.point);
  Direction d = load_blocks(m, a.direction);
  check_point(p, z);
  check_point(p, d);
  DDValue v;
  std::vector<double> beta;
  if (a.target == "F") {
    v = dd_F(p, z, d, a.order);
  } else if (a.target == "Theta") {
    beta = resolve_beta(p, a.beta, true);
    v = dd_Theta(p, z, d, beta, a.order);
  } else if (a.target == "Psi") {
    v = dd_Psi(p, z.theta, d.theta, a.order);
  } else {
    throw std::invalid_argument("--target must be F, Theta or Psi");
  }
  json body{{"target", a.target}, {"value", v.value}, {"first", v.first}, {"order", a.order}};
  body["second"] = v.second ? json(*v.second) : json(nullptr);
  if (a.oracle) {
    ScalarFn f;
    Eigen::VectorXd x, dir;
    if (a.target == "Psi") {
      f = [&p](const Eigen::VectorXd& y) {
        return eval_objective(p, std::vector<double>(y.data(), y.data() + y.size()));
      };
      x = Eigen::Map<const Eigen::VectorXd>(z.theta.data(), p.n);
      dir = Eigen::Map<const Eigen::VectorXd>(d.theta.data(), p.n);
    } else {
      f = [&p, &a, &beta](const Eigen::VectorXd& y) {
        Point q = unflatten(p, y);
        return a.target == "F" ? eval_F(p, q) : eval_Theta(p, q, beta);
      };
      x = flatten(p, z);
      dir = flatten(p, d);
    }
    json o;
    for (int k = 1; k <= a.order; ++k) {
      auto r = fd_oracle(f, x, dir, k);
      o[k == 1 ? "first" : "second"] = {
          {"value", r.value}, {"error", r.error}, {"converged", r.converged}, {"tau", r.tau}};
    }
    body["oracle"] = o;
  }
  emit(body, m, a.out);
}

struct ConeArgs {
  std::string problem, point, direction, out;
};

void run_cone(const ConeArgs& a) {
  Manifest m("cone check");
  CompositeProblem p = load_problem(m, a.problem);
  Point z = load_blocks(m, a.point);
  Direction d = load_blocks(m, a.direction);
  check_point(p, d);
  auto mem = tangent_membership(p, z, d);
  json body = membership_json(mem);
  body["radial_decidable"] = radial_decidable(p);
  emit(body, m, a.out);
}

struct ThresholdArgs {
  std::string problem, out;
  std::vector<double> beta;
  int budget = 10000;
  std::uint64_t seed = 1;
  double eps = 1e-3;
};

void run_thresholds(const ThresholdArgs& a) {
  Manifest m("thresholds");
  m.seed(a.seed);
  CompositeProblem p = load_problem(m, a.problem);
  auto beta = resolve_beta(p, a.beta, false);
  if (beta.empty()) beta.assign(p.L(), 1.0);
  SamplerOptions so;
  so.budget = a.budget;
  so.seed = a.seed;
  so.eps = a.eps;
  emit(penalty_json(make_penalty_config(p, beta, so)), m, a.out);
}

struct CheckArgs {
  std::string problem, point, target = "p1", mode = "auto", expect, out;
  std::vector<double> beta;
  int order = 1;
  std::uint64_t seed = 7;
  double tol = 1e-8;
  int starts = 64;
};

void run_check(const CheckArgs& a) {
  Manifest m("check");
  m.seed(a.seed);
  CompositeProblem p = load_problem(m, a.problem);
  Point z = load_blocks(m, a.point);
  CheckOptions opt;
  opt.mode = mode_from_name(a.mode);
  opt.seed = a.seed;
  opt.tol = a.tol;
  opt.starts = a.starts;
  Target t = target_from_name(a.target);
  if (a.order != 1 && a.order != 2) throw std::invalid_argument("--order must be 1 or 2");
  std::optional<std::vector<double>> beta;
  if (t == Target::P1) beta = resolve_beta(p, a.beta, true);
  StationarityReport r;
  if (a.order == 1) {
    if (t == Target::P1)
      r = check_d_stationary_P1(p, z, *beta, opt);
    else if (t == Target::P0)
      r = check_d_stationary_P0(p, z, opt);
    else
      r = check_d_stationary_P(p, z.theta, opt);
  } else {
    r = check_second_order(p, z, t, beta, opt);
  }
  emit(report_json(r), m, a.out);
  check_expectation(a.expect, r.verdict);
}

struct SolveArgs {
  std::string problem, init = "zero", init_point, rule = "armijo", trace, out, report;
  std::vector<double> beta;
  int max_iters = 500;
  double stop_tol = 1e-6, step = 1.0;
  std::uint64_t seed = 1;
};

void run_solve(const SolveArgs& a) {
  Manifest m("solve");
  m.seed(a.seed);
  CompositeProblem p = load_problem(m, a.problem);
  auto beta = resolve_beta(p, a.beta, true);
  SolveConfig cfg;
  cfg.max_iters = a.max_iters;
  cfg.stop_tol = a.stop_tol;
  cfg.seed = a.seed;
  cfg.step = a.step;
  cfg.rule = step_rule_from_name(a.rule);
  cfg.init = init_policy_from_name(a.init);
  if (cfg.init == InitPolicy::User) {
    if (a.init_point.empty()) throw std::invalid_argument("--init file needs --init-point");
    cfg.init_point = load_blocks(m, a.init_point);
  }
  auto [z, tr] = minimize_theta(p, beta, cfg);
  auto pol = polish_to_feasible(p, z, beta);
  if (!a.trace.empty()) {
    std::ofstream os(a.trace);
    if (!os) throw std::invalid_argument("cannot write " + a.trace);
    write_trace_csv(os, tr);
  }
  json body{{"reason", tr.reason},
            {"iterations", tr.iterations},
            {"budget_exhausted", tr.budget_exhausted},
            {"probe_min", finite(tr.probe_min)},
            {"Theta", eval_Theta(p, pol.z, beta)},
            {"max_residual", residuals(p, pol.z).max_abs},
            {"polish", {{"lifted", pol.lifted}, {"theta_change", pol.theta_change}}},
            {"point", blocks_to_json(pol.z)}};
  if (!a.out.empty()) write_text_file(a.out, blocks_to_json(pol.z).dump(2) + "\n");
  emit(body, m, a.report);
}

struct RnnArgs {
  std::string data, out, trace, report;
  int n0 = 2, n1 = 3, n2 = 1, T = 0;
  double alpha = 0.1, lambda = 0.05;
  bool desk = false;
  std::uint64_t seed = 2024;
  int max_iters = 2000;
  std::string init = "random";
};

RnnSpec rnn_spec(const RnnArgs& a, Manifest& m) {
  if (a.desk || a.data.empty()) {
    if (!a.desk) throw std::invalid_argument("pass --data DIR or --desk");
    m.seed(a.seed);
    RnnSpec s = desk_spec(a.seed);
    s.alpha = a.alpha;
    s.lambda = a.lambda;
    return s;
  }
  std::optional<int> T;
  if (a.T > 0) T = a.T;
  RnnSpec s = load_rnn_data(a.data, a.n0, a.n1, a.n2, a.alpha, a.lambda, T);
  return s;
}

void run_rnn_build(const RnnArgs& a) {
  Manifest m("rnn build");
  CompositeProblem p = build_problem(rnn_spec(a, m));
  std::string text = serialize_problem(p);
  if (a.out.empty())
    std::cout << text;
  else
    write_text_file(a.out, text);
}

void run_rnn_thresholds(const RnnArgs& a) {
  Manifest m("rnn thresholds");
  RnnSpec s = rnn_spec(a, m);
  emit(rnn_thresholds_json(rnn_thresholds(s)), m, a.out);
}

void run_rnn_train(const RnnArgs& a) {
  Manifest m("rnn train");
  RnnSpec s = rnn_spec(a, m);
  SolveConfig cfg;
  cfg.max_iters = a.max_iters;
  cfg.seed = a.seed;
  cfg.init = init_policy_from_name(a.init);
  if (cfg.init == InitPolicy::User) throw std::invalid_argument("rnn train supports --init zero or random");
  RnnReport rep = train_and_certify(s, std::nullopt, cfg);
  if (!a.trace.empty()) {
    std::ofstream os(a.trace);
    if (!os) throw std::invalid_argument("cannot write " + a.trace);
    write_trace_csv(os, rep.trace);
  }
  if (!a.out.empty()) write_text_file(a.out, blocks_to_json(rep.z).dump(2) + "\n");
  json body{{"thresholds", rnn_thresholds_json(rep.thresholds)},
            {"penalty", penalty_json(rep.cfg)},
            {"solver", {{"reason", rep.trace.reason}, {"iterations", rep.trace.iterations}}},
            {"Theta", eval_Theta(rep.problem, rep.z, rep.cfg.beta)},
            {"max_residual", rep.max_residual},
            {"probe_min", finite(rep.probe_min)},
            {"p0_first", report_json(rep.p0_first)},
            {"p1_first", report_json(rep.p1_first)},
            {"p0_second", report_json(rep.p0_second)},
            {"p1_second", report_json(rep.p1_second)},
            {"relation", relation_json(rep.relation)},
            {"identity_holds", rep.identity_holds},
            {"point", blocks_to_json(rep.z)}};
  emit(body, m, a.report);
}

void run_repro_cmd(const std::string& name, bool list, bool as_json) {
  if (list) {
    for (const auto& n : repro_names()) std::cout << n << '\n';
    return;
  }
  if (name.empty()) throw std::invalid_argument("scenario name required (see --list)");
  std::vector<std::string> names = name == "all" ? repro_names() : std::vector<std::string>{name};
  bool all_pass = true;
  json out = json::array();
  for (const auto& n : names) {
    ReproResult r = run_repro(n);
    all_pass = all_pass && r.pass();
    if (as_json) {
      json checks = json::array();
      for (const auto& c : r.checks)
        checks.push_back({{"label", c.label}, {"value", finite(c.value)}, {"expected", finite(c.expected)},
                          {"tol", c.tol}, {"pass", c.pass}});
      out.push_back({{"name", n}, {"pass", r.pass()}, {"seconds", r.seconds}, {"checks", checks}});
    } else {
      std::cout << "== " << n << " (" << std::fixed << std::setprecision(2) << r.seconds << " s)\n";
      std::cout.unsetf(std::ios::floatfield);
      for (const auto& l : r.lines) std::cout << "  " << l << '\n';
      std::cout << (r.pass() ? "PASS " : "FAIL ") << n << '\n';
    }
  }
  if (as_json) std::cout << json{{"schema_version", kSchemaVersion}, {"scenarios", out}}.dump(2) << '\n';
  if (!all_pass) throw Exit(kScenarioFailed, "");
}

}  // namespace

void register_commands(CLI::App& app, int& result) {
  (void)result;
  auto beta_opt = [](CLI::App* c, std::vector<double>& v) {
    c->add_option("--beta", v, "penalty weights, comma separated")->delimiter(',');
  };

  auto* ev = app.add_subcommand("eval", "evaluate F, Theta and residuals at a point");
  auto ea = std::make_shared<EvalArgs>();
  ev->add_option("--problem", ea->problem, "problem JSON")->required();
  ev->add_option("--point", ea->point, "point JSON (default: lift of theta = 0)");
  ev->add_option("--emit-problem", ea->emit_problem, "write the canonical problem text here");
  ev->add_option("--out", ea->out, "report file (default stdout)");
  beta_opt(ev, ea->beta);
  ev->callback([ea] { run_eval(*ea); });

  auto* dd = app.add_subcommand("dderiv", "first and second directional derivatives");
  auto da = std::make_shared<DderivArgs>();
  dd->add_option("--problem", da->problem)->required();
  dd->add_option("--point", da->point)->required();
  dd->add_option("--direction", da->direction)->required();
  dd->add_option("--target", da->target, "F, Theta or Psi")->check(CLI::IsMember({"F", "Theta", "Psi"}));
  dd->add_option("--order", da->order)->check(CLI::Range(1, 2));
  dd->add_flag("--oracle", da->oracle, "also run the finite-difference oracle");
  dd->add_option("--out", da->out);
  beta_opt(dd, da->beta);
  dd->callback([da] { run_dderiv(*da); });

  auto* cone = app.add_subcommand("cone", "tangent and radial cone membership");
  auto* cc = cone->add_subcommand("check", "test a direction at a feasible point");
  cone->require_subcommand(1);
  auto ca = std::make_shared<ConeArgs>();
  cc->add_option("--problem", ca->problem)->required();
  cc->add_option("--point", ca->point)->required();
  cc->add_option("--direction", ca->direction)->required();
  cc->add_option("--out", ca->out);
  cc->callback([ca] { run_cone(*ca); });

  auto* th = app.add_subcommand("thresholds", "moduli, penalty thresholds and certification");
  auto ta = std::make_shared<ThresholdArgs>();
  th->add_option("--problem", ta->problem)->required();
  th->add_option("--budget", ta->budget, "sampled pairs per function");
  th->add_option("--seed", ta->seed);
  th->add_option("--eps", ta->eps, "level-set inflation");
  th->add_option("--out", ta->out);
  beta_opt(th, ta->beta);
  th->callback([ta] { run_thresholds(*ta); });

  auto* ck = app.add_subcommand("check", "first- or second-order d-stationarity");
  auto ka = std::make_shared<CheckArgs>();
  ck->add_option("--problem", ka->problem)->required();
  ck->add_option("--point", ka->point)->required();
  ck->add_option("--target", ka->target, "p, p0 or p1");
  ck->add_option("--order", ka->order);
  ck->add_option("--mode", ka->mode, "auto, enumerate or sample");
  ck->add_option("--seed", ka->seed);
  ck->add_option("--tol", ka->tol);
  ck->add_option("--starts", ka->starts);
  ck->add_option("--expect", ka->expect, "exit 3 unless the verdict matches");
  ck->add_option("--out", ka->out);
  beta_opt(ck, ka->beta);
  ck->callback([ka] { run_check(*ka); });

  auto* sv = app.add_subcommand("solve", "minimize the penalty function");
  auto sa = std::make_shared<SolveArgs>();
  sv->add_option("--problem", sa->problem)->required();
  sv->add_option("--max-iters", sa->max_iters);
  sv->add_option("--stop-tol", sa->stop_tol);
  sv->add_option("--seed", sa->seed);
  sv->add_option("--init", sa->init, "zero, random or file");
  sv->add_option("--init-point", sa->init_point);
  sv->add_option("--rule", sa->rule, "armijo, fixed or diminishing");
  sv->add_option("--step", sa->step);
  sv->add_option("--trace", sa->trace, "CSV trace file");
  sv->add_option("--out", sa->out, "final point JSON");
  sv->add_option("--report", sa->report, "report file (default stdout)");
  beta_opt(sv, sa->beta);
  sv->callback([sa] { run_solve(*sa); });

  auto* rn = app.add_subcommand("rnn", "Elman RNN instances");
  rn->require_subcommand(1);
  auto ra = std::make_shared<RnnArgs>();
  auto common = [ra](CLI::App* c) {
    c->add_option("--data", ra->data, "directory of per-sequence CSV files");
    c->add_flag("--desk", ra->desk, "use the seeded desk instance");
    c->add_option("--seed", ra->seed);
    c->add_option("--n0", ra->n0);
    c->add_option("--n1", ra->n1);
    c->add_option("--n2", ra->n2);
    c->add_option("--t", ra->T, "steps per sequence (default: all rows)");
    c->add_option("--alpha", ra->alpha);
    c->add_option("--lambda", ra->lambda);
    c->add_option("--out", ra->out);
  };
  auto* rb = rn->add_subcommand("build", "write the problem JSON");
  common(rb);
  rb->callback([ra] { run_rnn_build(*ra); });
  auto* rt = rn->add_subcommand("thresholds", "closed-form thresholds");
  common(rt);
  rt->callback([ra] { run_rnn_thresholds(*ra); });
  auto* rr = rn->add_subcommand("train", "train, polish and certify");
  common(rr);
  rr->add_option("--trace", ra->trace, "CSV trace file");
  rr->add_option("--report", ra->report, "certification report file (default stdout)");
  rr->add_option("--max-iters", ra->max_iters);
  rr->add_option("--init", ra->init, "zero or random (in the level set)");
  rr->callback([ra] { run_rnn_train(*ra); });

  auto* rp = app.add_subcommand("repro", "worked-example regression scenarios");
  auto name = std::make_shared<std::string>();
  auto list = std::make_shared<bool>(false);
  auto as_json = std::make_shared<bool>(false);
  rp->add_option("name", *name, "scenario name or 'all'");
  rp->add_flag("--list", *list, "list scenarios");
  rp->add_flag("--json", *as_json, "JSON output");
  rp->callback([name, list, as_json] { run_repro_cmd(*name, *list, *as_json); });
}

}  // namespace dstat::cli
