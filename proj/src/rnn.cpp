#include "dstat/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dstat/dcalc.hpp"

namespace dstat {

void RnnSpec::validate() const {
  if (n0 < 1 || n1 < 1 || n2 < 1 || T < 1 || N < 1) throw DimensionError("rnn dimensions must be positive");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw DimensionError("rnn alpha must lie in [0, 1)");
  if (!(lambda > 0.0)) throw DimensionError("rnn lambda must be positive");
  if (static_cast<int>(x.size()) != N || static_cast<int>(y.size()) != N)
    throw DimensionError("rnn data must hold N sequences");
  for (int k = 0; k < N; ++k) {
    if (static_cast<int>(x[k].size()) != T || static_cast<int>(y[k].size()) != T)
      throw DimensionError("sequence " + std::to_string(k) + " must have T steps");
    for (int t = 0; t < T; ++t) {
      if (static_cast<int>(x[k][t].size()) != n0) throw DimensionError("input width differs from n0");
      if (static_cast<int>(y[k][t].size()) != n2) throw DimensionError("label width differs from n2");
    }
  }
}

RnnThresholds rnn_closed_form(double gamma_y, double lambda, int N, int T) {
  RnnThresholds r;
  r.gamma_y = gamma_y;
  double NT = static_cast<double>(N) * T;
  double q = std::sqrt(gamma_y / lambda);
  r.gamma_1 = 0.0;
  double pw = 1.0;
  for (int i = 0; i < T; ++i, pw *= q) r.gamma_1 += pw;
  r.t1 = r.gamma_1 * gamma_y * std::sqrt(2.0 / (lambda * NT));
  r.t2 = std::sqrt(2.0 * gamma_y / NT);
  r.K_g = std::sqrt(2.0 * gamma_y / NT);
  r.K_W = q;
  r.K_V = q;
  r.K_act = 1.0;
  return r;
}

RnnThresholds rnn_thresholds(const RnnSpec& spec) {
  spec.validate();
  double ss = 0.0;
  for (const auto& seq : spec.y)
    for (const auto& yt : seq)
      for (double v : yt) ss += v * v;
  return rnn_closed_form(ss / (2.0 * spec.N * spec.T), spec.lambda, spec.N, spec.T);
}

RnnLayout rnn_layout(const RnnSpec& s) {
  RnnLayout l;
  l.A = 0;
  l.V = l.A + s.n1 * s.n0;
  l.W = l.V + s.n2 * s.n1;
  l.b = l.W + s.n1 * s.n1;
  l.c = l.b + s.n1;
  l.n = l.c + s.n2;
  return l;
}

CompositeProblem build_problem(const RnnSpec& s) {
  s.validate();
  const RnnLayout lay = rnn_layout(s);
  CompositeProblem p;
  p.n = lay.n;
  p.lambda = s.lambda;
  const int hid = s.N * s.n1;
  const int out = s.N * s.T * s.n2;
  for (int t = 1; t <= s.T; ++t) {
    std::vector<Expr> w;
    for (int k = 0; k < s.N; ++k)
      for (int i = 0; i < s.n1; ++i) {
        std::vector<double> coef;
        std::vector<Expr> terms;
        for (int j = 0; j < s.n0; ++j) {
          coef.push_back(s.x[k][t - 1][j]);
          terms.push_back(ex::param(lay.A + j * s.n1 + i));
        }
        coef.push_back(1.0);
        terms.push_back(ex::param(lay.b + i));
        Expr e = ex::affine(coef, 0.0, terms);
        if (t > 1) {
          std::vector<Expr> a, b;
          for (int j = 0; j < s.n1; ++j) {
            a.push_back(ex::param(lay.W + j * s.n1 + i));
            b.push_back(ex::input(2 * (t - 1), k * s.n1 + j));
          }
          e = ex::sum({ex::inner(a, b), e});
        }
        w.push_back(e);
      }
    p.layers.push_back(std::move(w));
    p.dims.push_back(hid);
    std::vector<Expr> sl;
    for (int idx = 0; idx < hid; ++idx) sl.push_back(ex::leaky(ex::input(2 * t - 1, idx), s.alpha));
    p.layers.push_back(std::move(sl));
    p.dims.push_back(hid);
  }
  std::vector<Expr> v(out), r(out), res(out);
  for (int t = 0; t < s.T; ++t)
    for (int k = 0; k < s.N; ++k)
      for (int i = 0; i < s.n2; ++i) {
        int idx = (t * s.N + k) * s.n2 + i;
        std::vector<Expr> a, b;
        for (int j = 0; j < s.n1; ++j) {
          a.push_back(ex::param(lay.V + j * s.n2 + i));
          b.push_back(ex::input(2 * (t + 1), k * s.n1 + j));
        }
        v[idx] = ex::sum({ex::inner(a, b), ex::param(lay.c + i)});
        r[idx] = ex::leaky(ex::input(2 * s.T + 1, idx), s.alpha);
        res[idx] = ex::affine({1.0}, -s.y[k][t][i], {ex::input(2 * s.T + 2, idx)});
      }
  p.layers.push_back(std::move(v));
  p.dims.push_back(out);
  p.layers.push_back(std::move(r));
  p.dims.push_back(out);
  p.outer = ex::scale(1.0 / (2.0 * s.N * s.T), ex::sqnorm(res));
  p.structure = Structure{"rnn", s.N, s.T, s.n0, s.n1, s.n2, s.alpha};
  p.validate();
  return p;
}

namespace {

double leaky_dir(double w, double dw, double alpha) {
  if (w > kKinkTol) return dw;
  if (w < -kKinkTol) return alpha * dw;
  return std::max(dw, alpha * dw);
}

}  // namespace

ConeMembership rnn_tangent_cone_check(const RnnSpec& s, const Point& z, const Direction& d) {
  CompositeProblem p = build_problem(s);
  check_point(p, z);
  check_point(p, d);
  require_feasible(p, z);
  const RnnLayout lay = rnn_layout(s);
  auto A = [&](const std::vector<double>& th, int i, int j) { return th[lay.A + j * s.n1 + i]; };
  auto V = [&](const std::vector<double>& th, int i, int j) { return th[lay.V + j * s.n2 + i]; };
  auto W = [&](const std::vector<double>& th, int i, int j) { return th[lay.W + j * s.n1 + i]; };
  const auto& th = z.theta;
  const auto& dth = d.theta;
  ConeMembership m;
  m.violation.assign(p.L(), {});
  double bilinear = 0.0;  // largest |D_W d_s| or |D_V d_s|
  auto note = [&](int layer, int idx, double expected) {
    double v = d.u[layer - 1][idx] - expected;
    m.violation[layer - 1][idx] = v;
    if (std::abs(v) > m.max_violation) {
      m.max_violation = std::abs(v);
      m.worst_layer = layer;
    }
  };
  for (int l = 1; l <= p.L(); ++l) m.violation[l - 1].assign(p.dims[l - 1], 0.0);
  for (int t = 1; t <= s.T; ++t) {
    int lw = 2 * t - 1, ls = 2 * t;
    for (int k = 0; k < s.N; ++k)
      for (int i = 0; i < s.n1; ++i) {
        double e = dth[lay.b + i];
        for (int j = 0; j < s.n0; ++j) e += A(dth, i, j) * s.x[k][t - 1][j];
        if (t > 1) {
          double cross = 0.0;
          for (int j = 0; j < s.n1; ++j) {
            e += W(dth, i, j) * z.u[ls - 3][k * s.n1 + j] + W(th, i, j) * d.u[ls - 3][k * s.n1 + j];
            cross += W(dth, i, j) * d.u[ls - 3][k * s.n1 + j];
          }
          bilinear = std::max(bilinear, std::abs(cross));
        }
        note(lw, k * s.n1 + i, e);
      }
    for (int idx = 0; idx < s.N * s.n1; ++idx)
      note(ls, idx, leaky_dir(z.u[lw - 1][idx], d.u[lw - 1][idx], s.alpha));
  }
  const int lv = 2 * s.T + 1, lr = 2 * s.T + 2;
  for (int t = 0; t < s.T; ++t)
    for (int k = 0; k < s.N; ++k)
      for (int i = 0; i < s.n2; ++i) {
        int idx = (t * s.N + k) * s.n2 + i;
        double e = dth[lay.c + i], cross = 0.0;
        for (int j = 0; j < s.n1; ++j) {
          e += V(dth, i, j) * z.u[2 * t + 1][k * s.n1 + j] + V(th, i, j) * d.u[2 * t + 1][k * s.n1 + j];
          cross += V(dth, i, j) * d.u[2 * t + 1][k * s.n1 + j];
        }
        bilinear = std::max(bilinear, std::abs(cross));
        note(lv, idx, e);
      }
  for (int idx = 0; idx < s.N * s.T * s.n2; ++idx)
    note(lr, idx, leaky_dir(z.u[lv - 1][idx], d.u[lv - 1][idx], s.alpha));
  m.in_tangent = m.max_violation <= kTangentTol;
  if (m.in_tangent) m.in_radial = bilinear <= kTangentTol;
  return m;
}

namespace {

std::vector<double> parse_row(const std::string& line, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(cell, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument(where + ": non-numeric cell '" + cell + "'");
    }
    while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
    if (pos != cell.size()) throw std::invalid_argument(where + ": non-numeric cell '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

bool looks_numeric(const std::string& line) {
  std::stringstream ss(line);
  std::string cell;
  if (!std::getline(ss, cell, ',')) return false;
  try {
    std::size_t pos = 0;
    std::stod(cell, &pos);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

RnnSpec load_rnn_data(const std::string& dir, int n0, int n1, int n2, double alpha, double lambda,
                      std::optional<int> T) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::invalid_argument("data directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::invalid_argument("no .csv files in " + dir);
  RnnSpec s;
  s.n0 = n0;
  s.n1 = n1;
  s.n2 = n2;
  s.alpha = alpha;
  s.lambda = lambda;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string line;
    std::vector<std::pair<double, std::vector<double>>> rows;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (rows.empty() && lineno == 1 && !looks_numeric(line)) continue;
      std::string where = f.filename().string() + ":" + std::to_string(lineno);
      auto v = parse_row(line, where);
      if (static_cast<int>(v.size()) != 1 + n0 + n2)
        throw std::invalid_argument(where + ": expected " + std::to_string(1 + n0 + n2) + " columns");
      rows.emplace_back(v[0], std::vector<double>(v.begin() + 1, v.end()));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (T) {
      if (static_cast<int>(rows.size()) < *T)
        throw std::invalid_argument(f.filename().string() + ": fewer than T rows");
      rows.resize(*T);
    }
    std::vector<std::vector<double>> xs, ys;
    for (const auto& r : rows) {
      xs.emplace_back(r.second.begin(), r.second.begin() + n0);
      ys.emplace_back(r.second.begin() + n0, r.second.end());
    }
    s.x.push_back(std::move(xs));
    s.y.push_back(std::move(ys));
  }
  s.N = static_cast<int>(files.size());
  s.T = static_cast<int>(s.x.front().size());
  s.validate();
  return s;
}

RnnSpec desk_spec(std::uint64_t seed) {
  RnnSpec s;
  s.n0 = 2;
  s.n1 = 3;
  s.n2 = 1;
  s.T = 3;
  s.N = 1;
  s.alpha = 0.1;
  s.lambda = 0.05;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  s.x.assign(1, {});
  s.y.assign(1, {});
  for (int t = 0; t < s.T; ++t) {
    s.x[0].push_back({uni(rng), uni(rng)});
    s.y[0].push_back({uni(rng)});
  }
  return s;
}

RnnReport train_and_certify(const RnnSpec& spec, const std::optional<std::vector<double>>& beta,
                            const SolveConfig& cfg, const CheckOptions& chk) {
  RnnReport rep;
  rep.problem = build_problem(spec);
  const CompositeProblem& p = rep.problem;
  rep.thresholds = rnn_thresholds(spec);
  std::vector<double> b;
  if (beta) {
    b = *beta;
  } else {
    for (int l = 1; l <= p.L(); ++l) {
      double t = l <= 2 * spec.T ? rep.thresholds.t1 : rep.thresholds.t2;
      b.push_back(t > 0.0 ? 1.05 * t : 1e-6);
    }
  }
  rep.cfg = make_penalty_config(p, b);
  auto [z, trace] = minimize_theta(p, b, cfg);
  rep.polish = polish_to_feasible(p, z, b);
  rep.z = rep.polish.z;
  rep.trace = std::move(trace);
  rep.max_residual = residuals(p, rep.z).max_abs;
  rep.probe_min = probe_min(p, rep.z, b, cfg.probe_dirs, cfg.seed);
  rep.p1_first = check_d_stationary_P1(p, rep.z, b, chk);
  rep.p1_second = check_second_order(p, rep.z, Target::P1, b, chk);
  if (residuals(p, rep.z).feasible) {
    rep.p0_first = check_d_stationary_P0(p, rep.z, chk);
    rep.p0_second = check_second_order(p, rep.z, Target::P0, std::nullopt, chk);
  } else {
    rep.p0_first.target = rep.p0_second.target = Target::P0;
    rep.p0_first.note = rep.p0_second.note = "infeasible point";
  }
  rep.relation = compare_sets_on_point(p, rep.z, rep.cfg, chk);
  rep.identity_holds = rep.relation.in_D0 == rep.relation.in_SD0;
  return rep;
}

}  // namespace dstat
