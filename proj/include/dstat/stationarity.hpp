#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dstat/penalty.hpp"
#include "dstat/problem.hpp"

namespace dstat {

enum class Verdict { Stationary, NotStationary, Inconclusive };
enum class Target { P, P0, P1 };
enum class SearchMode { Auto, Enumerate, Sample };

const char* verdict_name(Verdict v);
const char* target_name(Target t);
Target target_from_name(const std::string& s);
SearchMode mode_from_name(const std::string& s);

struct CheckOptions {
  SearchMode mode = SearchMode::Auto;
  double tol = 1e-8;
  int starts = 64;
  int iters = 500;
  std::uint64_t seed = 7;
  long enumerate_cap = 1L << 20;
  int auto_tie_limit = 14;  // Auto enumerates when at most this many ties are present
};

struct StationarityReport {
  Target target = Target::P1;
  int order = 1;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<Direction> witness;    // block direction, unit max-norm
  std::vector<double> witness_reduced; // theta-space (or x-space) direction when applicable
  double witness_value = 0.0;          // derivative re-evaluated at the witness
  double min_value = 0.0;              // smallest value met by the search
  std::string mode;                    // "exhaustive" or "sampled"
  long pieces = 0;
  long samples = 0;
  double tol = 1e-8;
  std::string note;
};

StationarityReport check_d_stationary_P1(const CompositeProblem& p, const Point& z, const std::vector<double>& beta,
                                         const CheckOptions& opt = {});
StationarityReport check_d_stationary_P0(const CompositeProblem& p, const Point& z, const CheckOptions& opt = {});
// Problem (P) at theta, through the feasible lift.
StationarityReport check_d_stationary_P(const CompositeProblem& p, const std::vector<double>& theta,
                                        const CheckOptions& opt = {});

// target P0 (or P): F^(2) >= 0 on radial critical directions.
// target P1: Theta^(2) >= 0 on lifted critical tangent directions (beta required).
StationarityReport check_second_order(const CompositeProblem& p, const Point& z, Target target,
                                      const std::optional<std::vector<double>>& beta, const CheckOptions& opt = {});

struct SufficientReport {
  std::string verdict;  // "sufficient-holds", "fails", "inconclusive"
  std::string mode;
  StationarityReport first;
  std::optional<Direction> witness;
  double min_value = 0.0;
  std::string note;
};
SufficientReport check_strong_local_min_sufficient(const CompositeProblem& p, const Point& z,
                                                   const PenaltyConfig& cfg, const CheckOptions& opt = {});

struct SetRelation {
  bool feasible = false;
  bool in_level_set = false;
  bool in_D0 = false, in_D1 = false, in_SD0 = false, in_SD1 = false;
  StationarityReport d0, d1, sd0, sd1;
  std::vector<std::string> violations;  // broken implications, as diagnostics
  bool consistent = true;
};
SetRelation compare_sets_on_point(const CompositeProblem& p, const Point& z, const PenaltyConfig& cfg,
                                  const CheckOptions& opt = {});

// Scalar function of x on a box, for polyhedral examples.
struct BoxProblem {
  Expr f;  // over param(i) = x_i
  std::vector<double> lo, hi;
};
StationarityReport check_box_stationarity(const BoxProblem& bp, const std::vector<double>& x, int order,
                                          const CheckOptions& opt = {});

}  // namespace dstat
