#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dstat/problem.hpp"

namespace dstat {

struct Moduli {
  double K_g = 0.0;
  std::vector<double> K;  // K_1..K_{L-1}
  bool heuristic = false;
  std::string method;     // per function: "closed-form", "affine", "sampled"
  int accepted = 0;       // level-set samples used
};

struct SamplerOptions {
  int budget = 10000;  // pairs per function
  double eps = 1e-3;   // level-set inflation radius
  std::uint64_t seed = 1;
};

struct PenaltyConfig {
  std::vector<double> beta;
  double K_g = 0.0;
  std::vector<double> K;
  double gamma_bar = 0.0;
  double eps = 1e-3;
  std::vector<double> thresholds;
  bool certified = false;
  bool heuristic = false;
  std::string method;
};

// Sampled points from lev_{<= gamma} Theta; exposed for property tests.
std::vector<Point> sample_level_set(const CompositeProblem& p, const std::vector<double>& beta, double gamma,
                                    int count, std::uint64_t seed, int max_attempts = 0);

Moduli estimate_moduli(const CompositeProblem& p, const std::vector<double>& beta_init, double gamma_bar,
                       const SamplerOptions& opt = {});

// t_l = K_g prod_{j=l+1}^{L} (1 + K_{j-1}),  L = K.size() + 1.
std::vector<double> thresholds(double K_g, const std::vector<double>& K);

// Thresholds used for certification: the grouped closed forms for tagged RNN
// problems, the product formula otherwise.
std::vector<double> certification_thresholds(const CompositeProblem& p, const Moduli& m, double gamma_bar);

PenaltyConfig certify(const CompositeProblem& p, const std::vector<double>& beta, const Moduli& m,
                      double gamma_bar, double eps = 1e-3);

// Reference level at z0, moduli at beta, thresholds and the certified flag.
PenaltyConfig make_penalty_config(const CompositeProblem& p, const std::vector<double>& beta,
                                  const SamplerOptions& opt = {});

// Zero head, residual correction psi_{l-1} - u_l at layer l, chain-lifted tail
// (theta block fixed). Layer defaults to the largest infeasible one.
Direction lemma34_direction(const CompositeProblem& p, const Point& z, std::optional<int> layer = std::nullopt);

struct ExactnessVerdict {
  bool certified = false;
  bool in_level_set = false;
  bool stationary = false;
  bool feasible = false;
  double theta_value = 0.0;
  double max_residual = 0.0;
  std::string verdict;  // "feasible", "counterexample", "not-stationary", "outside-level-set", "uncertified"
};

ExactnessVerdict check_exactness_feasibility(const CompositeProblem& p, const Point& z, const PenaltyConfig& cfg);

}  // namespace dstat
