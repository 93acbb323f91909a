#pragma once

#include <optional>
#include <vector>

#include "dstat/problem.hpp"

namespace dstat {

inline constexpr double kTangentTol = 1e-9;

class InfeasiblePointError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ConeMembership {
  bool in_tangent = false;
  std::optional<bool> in_radial;
  std::vector<std::vector<double>> violation;  // d_{u_l} - psi'_{l-1}(...)
  double max_violation = 0.0;
  int worst_layer = 0;  // 1-based, 0 when no violation
};

void require_feasible(const CompositeProblem& p, const Point& z);

ConeMembership tangent_membership(const CompositeProblem& p, const Point& z, const Direction& d,
                                  double tol = kTangentTol);
Direction lift_direction(const CompositeProblem& p, const Point& z, const std::vector<double>& dtheta);

// Decided only when every layer map has ray degree <= 2; nullopt otherwise.
std::optional<bool> radial_membership(const CompositeProblem& p, const Point& z, const Direction& d);

// Max residual of z + tau d for each tau.
std::vector<double> tau_grid_residuals(const CompositeProblem& p, const Point& z, const Direction& d,
                                       const std::vector<double>& taus);
// z + tau d feasible (to rounding) for tau in {1e-5, ..., 1e-8}.
bool tau_grid_feasible(const CompositeProblem& p, const Point& z, const Direction& d);

bool radial_decidable(const CompositeProblem& p);

}  // namespace dstat
