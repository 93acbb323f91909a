#include "dstat/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dstat/algebra.hpp"
#include "dstat/dcalc.hpp"
#include "dstat/rnn.hpp"
#include "dstat/stationarity.hpp"

namespace dstat {

namespace {

using Rng = std::mt19937_64;

std::vector<double> random_ball(Rng& rng, int dim, double radius) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::vector<double> v(dim);
  double s = 0.0;
  for (auto& x : v) {
    x = nd(rng);
    s += x * x;
  }
  if (dim == 0) return v;
  double r = radius * std::pow(ud(rng), 1.0 / dim) / std::max(std::sqrt(s), 1e-300);
  for (auto& x : v) x *= r;
  return v;
}

// Draws u for a fixed theta with sum_l beta_l |r_l|_1 <= gamma.
Point propose_u(const CompositeProblem& p, const std::vector<double>& beta, double gamma,
                const std::vector<double>& theta, Rng& rng) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::exponential_distribution<double> ed(1.0);
  int m = p.total_u();
  std::vector<double> w(m + 1);
  double s = 0.0;
  for (auto& x : w) {
    x = ed(rng);
    s += x;
  }
  double budget = ud(rng) * gamma;
  Point z;
  z.theta = theta;
  int k = 0;
  for (int l = 1; l <= p.L(); ++l) {
    auto psi = eval_layer(p, l, theta, z.u);
    for (auto& v : psi) {
      double sign = ud(rng) < 0.5 ? -1.0 : 1.0;
      v += sign * budget * w[k++] / s / beta[l - 1];
    }
    z.u.push_back(std::move(psi));
  }
  return z;
}

bool in_level(const CompositeProblem& p, const Point& z, const std::vector<double>& beta, double gamma) {
  double v = eval_Theta(p, z, beta);
  return std::isfinite(v) && v <= gamma * (1.0 + 1e-12) + 1e-300;
}

double norm2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<double> stack(const std::vector<std::vector<double>>& u, int upto) {
  std::vector<double> out;
  for (int l = 0; l < upto; ++l) out.insert(out.end(), u[l].begin(), u[l].end());
  return out;
}

void perturb(std::vector<std::vector<double>>& u, int upto, double radius, Rng& rng) {
  int m = 0;
  for (int l = 0; l < upto; ++l) m += static_cast<int>(u[l].size());
  auto xi = random_ball(rng, m, radius);
  int k = 0;
  for (int l = 0; l < upto; ++l)
    for (auto& v : u[l]) v += xi[k++];
}

bool is_affine(const Expr& e) { return is_smooth_structure(e) && ray_degree(e) <= 1; }

// Jacobian of the given expressions with respect to u_1..u_upto (theta fixed at 0).
Eigen::MatrixXd u_jacobian(const CompositeProblem& p, const std::vector<Expr>& comps, int upto) {
  int m = 0;
  for (int l = 0; l < upto; ++l) m += p.dims[l];
  LinAlg alg;
  alg.m = m;
  std::vector<Lin> th(p.n, Lin{0.0, Eigen::VectorXd::Zero(m)});
  std::vector<std::vector<Lin>> u;
  int k = 0;
  for (int l = 0; l < upto; ++l) {
    std::vector<Lin> b;
    for (int i = 0; i < p.dims[l]; ++i) {
      Lin x{0.0, Eigen::VectorXd::Zero(m)};
      x.c[k++] = 1.0;
      b.push_back(x);
    }
    u.push_back(std::move(b));
  }
  alg.theta = &th;
  alg.u = &u;
  Eigen::MatrixXd J(comps.size(), m);
  for (std::size_t i = 0; i < comps.size(); ++i) J.row(i) = eval(*comps[i], alg).c.transpose();
  return J;
}

double spectral_norm(const Eigen::MatrixXd& J) {
  if (J.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  return svd.singularValues()(0);
}

}  // namespace

std::vector<Point> sample_level_set(const CompositeProblem& p, const std::vector<double>& beta, double gamma,
                                    int count, std::uint64_t seed, int max_attempts) {
  check_beta(p, beta);
  Rng rng(seed);
  double R = std::sqrt(std::max(gamma, 0.0) / p.lambda);
  int cap = max_attempts > 0 ? max_attempts : 200 * count;
  std::vector<Point> out;
  for (int a = 0; a < cap && static_cast<int>(out.size()) < count; ++a) {
    auto theta = random_ball(rng, p.n, R);
    Point z = propose_u(p, beta, gamma, theta, rng);
    if (in_level(p, z, beta, gamma)) out.push_back(std::move(z));
  }
  return out;
}

Moduli estimate_moduli(const CompositeProblem& p, const std::vector<double>& beta_init, double gamma_bar,
                       const SamplerOptions& opt) {
  check_beta(p, beta_init);
  Moduli m;
  const int L = p.L();
  m.K.assign(std::max(L - 1, 0), 0.0);

  if (p.structure && p.structure->kind == "rnn") {
    const Structure& s = *p.structure;
    RnnThresholds t = rnn_closed_form(gamma_bar, p.lambda, s.N, s.T);
    m.K_g = t.K_g;
    for (int j = 1; j <= L - 1; ++j) {
      int layer = j + 1;
      bool activation = (layer <= 2 * s.T) ? (layer % 2 == 0) : (layer == 2 * s.T + 2);
      m.K[j - 1] = activation ? t.K_act : t.K_W;
    }
    m.method = "closed-form:rnn";
    return m;
  }

  std::vector<std::string> methods;
  bool g_affine = is_affine(p.outer);
  std::vector<bool> layer_affine(L, false);
  if (g_affine) {
    m.K_g = spectral_norm(u_jacobian(p, {p.outer}, L));
    methods.push_back("g:affine");
  }
  for (int j = 1; j <= L - 1; ++j) {
    const auto& comps = p.layers[j];
    layer_affine[j] = std::all_of(comps.begin(), comps.end(), is_affine);
    if (layer_affine[j]) {
      m.K[j - 1] = spectral_norm(u_jacobian(p, comps, j));
      methods.push_back("psi" + std::to_string(j) + ":affine");
    }
  }
  bool need_sampling = !g_affine;
  for (int j = 1; j <= L - 1; ++j) need_sampling = need_sampling || !layer_affine[j];
  if (!need_sampling) {
    m.method = methods.empty() ? "affine" : methods.front();
    for (std::size_t i = 1; i < methods.size(); ++i) m.method += ";" + methods[i];
    return m;
  }

  Rng rng(opt.seed);
  const int base_count = 200;
  auto base = sample_level_set(p, beta_init, gamma_bar, base_count, opt.seed ^ 0x9e3779b97f4a7c15ULL);
  if (base.empty()) base.push_back(reference_point_and_level(p, beta_init).first);
  m.accepted = static_cast<int>(base.size());
  std::uniform_int_distribution<std::size_t> pick(0, base.size() - 1);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const double eps = opt.eps;

  auto near_pair = [&](const Point& b, int upto) {
    auto u1 = b.u, u2 = b.u;
    perturb(u1, upto, 0.5 * eps, rng);
    u2 = u1;
    double rho = std::pow(10.0, -4.0 * ud(rng));
    perturb(u2, upto, 0.5 * eps * rho, rng);
    return std::make_pair(u1, u2);
  };

  if (!g_affine) {
    double best = 0.0;
    for (int k = 0; k < opt.budget; ++k) {
      std::vector<std::vector<double>> u1, u2;
      if (k % 3 == 0) {
        u1 = base[pick(rng)].u;
        u2 = base[pick(rng)].u;
        perturb(u1, L, eps, rng);
        perturb(u2, L, eps, rng);
      } else {
        std::tie(u1, u2) = near_pair(base[pick(rng)], L);
      }
      double den = norm2(stack(u1, L), stack(u2, L));
      if (den <= 0.0) continue;
      best = std::max(best, std::abs(eval_g(p, u1) - eval_g(p, u2)) / den);
    }
    m.K_g = best;
    methods.push_back("g:sampled");
    m.heuristic = true;
  }

  for (int j = 1; j <= L - 1; ++j) {
    if (layer_affine[j]) continue;
    double best = 0.0;
    for (int k = 0; k < opt.budget; ++k) {
      const Point& b = base[pick(rng)];
      std::vector<std::vector<double>> u1, u2;
      if (k % 3 == 0) {
        Point other = b;
        for (int tries = 0; tries < 50; ++tries) {
          Point c = propose_u(p, beta_init, gamma_bar, b.theta, rng);
          if (in_level(p, c, beta_init, gamma_bar)) {
            other = std::move(c);
            break;
          }
        }
        u1 = b.u;
        u2 = other.u;
        perturb(u1, j, eps, rng);
        perturb(u2, j, eps, rng);
      } else {
        std::tie(u1, u2) = near_pair(b, j);
      }
      double den = norm2(stack(u1, j), stack(u2, j));
      if (den <= 0.0) continue;
      auto a = eval_layer(p, j + 1, b.theta, u1);
      auto c = eval_layer(p, j + 1, b.theta, u2);
      best = std::max(best, norm2(a, c) / den);
    }
    m.K[j - 1] = best;
    methods.push_back("psi" + std::to_string(j) + ":sampled");
    m.heuristic = true;
  }
  m.method = methods.front();
  for (std::size_t i = 1; i < methods.size(); ++i) m.method += ";" + methods[i];
  return m;
}

std::vector<double> thresholds(double K_g, const std::vector<double>& K) {
  const int L = static_cast<int>(K.size()) + 1;
  std::vector<double> t(L);
  for (int l = 1; l <= L; ++l) {
    double prod = 1.0;
    for (int j = l + 1; j <= L; ++j) prod *= 1.0 + K[j - 2];
    t[l - 1] = K_g * prod;
  }
  return t;
}

std::vector<double> certification_thresholds(const CompositeProblem& p, const Moduli& m, double gamma_bar) {
  if (p.structure && p.structure->kind == "rnn" && m.method == "closed-form:rnn") {
    const Structure& s = *p.structure;
    RnnThresholds t = rnn_closed_form(gamma_bar, p.lambda, s.N, s.T);
    std::vector<double> out(p.L());
    for (int l = 1; l <= p.L(); ++l) out[l - 1] = l <= 2 * s.T ? t.t1 : t.t2;
    return out;
  }
  return thresholds(m.K_g, m.K);
}

PenaltyConfig certify(const CompositeProblem& p, const std::vector<double>& beta, const Moduli& m,
                      double gamma_bar, double eps) {
  check_beta(p, beta);
  PenaltyConfig c;
  c.beta = beta;
  c.K_g = m.K_g;
  c.K = m.K;
  c.gamma_bar = gamma_bar;
  c.eps = eps;
  c.heuristic = m.heuristic;
  c.method = m.method;
  c.thresholds = certification_thresholds(p, m, gamma_bar);
  c.certified = true;
  for (int l = 0; l < p.L(); ++l) c.certified = c.certified && beta[l] > c.thresholds[l];
  return c;
}

PenaltyConfig make_penalty_config(const CompositeProblem& p, const std::vector<double>& beta,
                                  const SamplerOptions& opt) {
  auto [z0, gamma] = reference_point_and_level(p, beta);
  (void)z0;
  Moduli m = estimate_moduli(p, beta, gamma, opt);
  return certify(p, beta, m, gamma, opt.eps);
}

Direction lemma34_direction(const CompositeProblem& p, const Point& z, std::optional<int> layer) {
  Residuals r = residuals(p, z);
  int l0 = 0;
  if (layer) {
    l0 = *layer;
    if (l0 < 1 || l0 > p.L()) throw DimensionError("layer out of range");
  } else {
    for (int l = p.L(); l >= 1 && l0 == 0; --l)
      for (double v : r.rho[l - 1])
        if (std::abs(v) > kFeasTol) l0 = l;
    if (l0 == 0) throw std::invalid_argument("point is feasible; no correction direction exists");
  }
  Direction d = zeros_like(p);
  std::vector<Jet2> th(p.n);
  for (int i = 0; i < p.n; ++i) th[i] = {z.theta[i], 0.0, 0.0};
  std::vector<std::vector<Jet2>> u;
  JetAlg alg;
  alg.theta = &th;
  alg.u = &u;
  for (int l = 1; l <= p.L(); ++l) {
    if (l == l0) {
      for (int i = 0; i < p.dims[l - 1]; ++i) d.u[l - 1][i] = -r.rho[l - 1][i];
    } else if (l > l0) {
      for (int i = 0; i < p.dims[l - 1]; ++i) d.u[l - 1][i] = eval(*p.layers[l - 1][i], alg).a;
    }
    std::vector<Jet2> ul(p.dims[l - 1]);
    for (int i = 0; i < p.dims[l - 1]; ++i) ul[i] = {z.u[l - 1][i], d.u[l - 1][i], 0.0};
    u.push_back(std::move(ul));
  }
  return d;
}

ExactnessVerdict check_exactness_feasibility(const CompositeProblem& p, const Point& z, const PenaltyConfig& cfg) {
  ExactnessVerdict v;
  v.certified = cfg.certified;
  v.theta_value = eval_Theta(p, z, cfg.beta);
  Residuals r = residuals(p, z);
  v.max_residual = r.max_abs;
  v.feasible = r.feasible;
  v.in_level_set = v.theta_value <= cfg.gamma_bar * (1.0 + 1e-12) + 1e-15;
  if (!cfg.certified) {
    v.verdict = "uncertified";
    return v;
  }
  if (!v.in_level_set) {
    v.verdict = "outside-level-set";
    return v;
  }
  StationarityReport rep = check_d_stationary_P1(p, z, cfg.beta, {});
  v.stationary = rep.verdict == Verdict::Stationary;
  if (!v.stationary)
    v.verdict = "not-stationary";
  else
    v.verdict = v.feasible ? "feasible" : "counterexample";
  return v;
}

}  // namespace dstat
