#include "dstat/cones.hpp"

#include <cmath>
#include <limits>

#include "dstat/dcalc.hpp"

namespace dstat {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}  // namespace

void require_feasible(const CompositeProblem& p, const Point& z) {
  Residuals r = residuals(p, z);
  if (!r.feasible)
    throw InfeasiblePointError("point is not feasible (max residual " + std::to_string(r.max_abs) + ")");
}

ConeMembership tangent_membership(const CompositeProblem& p, const Point& z, const Direction& d, double tol) {
  require_feasible(p, z);
  auto sj = straight_jets(p, z, d);
  ConeMembership m;
  for (int l = 1; l <= p.L(); ++l) {
    std::vector<double> v(p.dims[l - 1]);
    for (int i = 0; i < p.dims[l - 1]; ++i) {
      v[i] = d.u[l - 1][i] - sj.psi[l - 1][i].a;
      if (std::abs(v[i]) > m.max_violation) {
        m.max_violation = std::abs(v[i]);
        m.worst_layer = l;
      }
    }
    m.violation.push_back(std::move(v));
  }
  m.in_tangent = m.max_violation <= tol;
  if (m.in_tangent) m.in_radial = radial_membership(p, z, d);
  return m;
}

Direction lift_direction(const CompositeProblem& p, const Point& z, const std::vector<double>& dtheta) {
  require_feasible(p, z);
  if (static_cast<int>(dtheta.size()) != p.n) throw DimensionError("d_theta has the wrong length");
  std::vector<Jet2> th(p.n);
  for (int i = 0; i < p.n; ++i) th[i] = {z.theta[i], dtheta[i], 0.0};
  std::vector<std::vector<Jet2>> u;
  JetAlg alg;
  alg.theta = &th;
  alg.u = &u;
  Direction d;
  d.theta = dtheta;
  for (int l = 1; l <= p.L(); ++l) {
    std::vector<double> dl(p.dims[l - 1]);
    for (int i = 0; i < p.dims[l - 1]; ++i) dl[i] = eval(*p.layers[l - 1][i], alg).a;
    std::vector<Jet2> ul(p.dims[l - 1]);
    for (int i = 0; i < p.dims[l - 1]; ++i) ul[i] = {z.u[l - 1][i], dl[i], 0.0};
    u.push_back(std::move(ul));
    d.u.push_back(std::move(dl));
  }
  return d;
}

bool radial_decidable(const CompositeProblem& p) {
  for (const auto& layer : p.layers)
    for (const auto& e : layer)
      if (ray_degree(e) > 2) return false;
  return true;
}

std::vector<double> tau_grid_residuals(const CompositeProblem& p, const Point& z, const Direction& d,
                                       const std::vector<double>& taus) {
  std::vector<double> out;
  for (double t : taus) out.push_back(residuals(p, axpy(t, d, z)).max_abs);
  return out;
}

bool tau_grid_feasible(const CompositeProblem& p, const Point& z, const Direction& d) {
  static const std::vector<double> taus = {1e-5, 1e-6, 1e-7, 1e-8};
  double zs = max_abs(z), ds = max_abs(d);
  auto res = tau_grid_residuals(p, z, d, taus);
  for (std::size_t k = 0; k < taus.size(); ++k)
    if (res[k] > 64.0 * kEps * (1.0 + zs + taus[k] * ds) + taus[k] * kTangentTol) return false;
  return true;
}

std::optional<bool> radial_membership(const CompositeProblem& p, const Point& z, const Direction& d) {
  require_feasible(p, z);
  auto sj = straight_jets(p, z, d);
  double scale = 1.0;
  for (int l = 1; l <= p.L(); ++l)
    for (int i = 0; i < p.dims[l - 1]; ++i) {
      double v = d.u[l - 1][i] - sj.psi[l - 1][i].a;
      if (std::abs(v) > kTangentTol) throw std::invalid_argument("direction is not tangent");
    }
  double dn = max_abs(d);
  if (dn == 0.0) return true;
  if (!radial_decidable(p)) return std::nullopt;
  scale = std::max(1.0, dn * dn);
  for (const auto& layer : sj.psi)
    for (const auto& j : layer)
      if (std::abs(j.b) > 1e-9 * scale) return false;
  return tau_grid_feasible(p, z, d);
}

}  // namespace dstat
