#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dstat/problem.hpp"

namespace dstat {

enum class StepRule { Armijo, Fixed, Diminishing };
enum class InitPolicy { Zero, Random, User };

StepRule step_rule_from_name(const std::string& s);
InitPolicy init_policy_from_name(const std::string& s);

struct SolveConfig {
  int max_iters = 500;
  StepRule rule = StepRule::Armijo;
  double step = 1.0;  // initial trial step, or c in c/sqrt(k)
  double stop_tol = 1e-6;
  std::uint64_t seed = 1;
  InitPolicy init = InitPolicy::Zero;
  std::optional<Point> init_point;  // used with InitPolicy::User
  int probe_dirs = 32;
};

struct TraceRow {
  int iter = 0;
  double theta = 0.0;  // Theta value
  double max_residual = 0.0;
  double step = 0.0;
};

struct SolveTrace {
  std::vector<TraceRow> rows;
  Point final;
  std::string reason;  // "converged", "budget", "stalled"
  bool budget_exhausted = false;
  double probe_min = 0.0;
  int iterations = 0;
};

struct PolishResult {
  Point z;
  bool lifted = false;
  double theta_change = 0.0;  // Theta(after) - Theta(before), 0 when unchanged
};

// Replaces u by eval_layers(theta) when that does not increase Theta.
PolishResult polish_to_feasible(const CompositeProblem& p, const Point& z, const std::vector<double>& beta);

// Smallest Theta'(z; d) over a seeded probe of unit max-norm directions.
double probe_min(const CompositeProblem& p, const Point& z, const std::vector<double>& beta, int count,
                 std::uint64_t seed, const std::vector<Direction>& extra = {});

std::pair<Point, SolveTrace> minimize_theta(const CompositeProblem& p, const std::vector<double>& beta,
                                            const SolveConfig& cfg = {});

void write_trace_csv(std::ostream& os, const SolveTrace& tr);

}  // namespace dstat
