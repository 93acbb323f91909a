#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dstat/cones.hpp"
#include "dstat/penalty.hpp"
#include "dstat/problem.hpp"
#include "dstat/solver.hpp"
#include "dstat/stationarity.hpp"

namespace dstat {

// x[k][t] and y[k][t] for sequence k and step t (0-based).
struct RnnSpec {
  int n0 = 0, n1 = 0, n2 = 0;
  int T = 0;
  int N = 0;
  double alpha = 0.1;
  double lambda = 0.05;
  std::vector<std::vector<std::vector<double>>> x;
  std::vector<std::vector<std::vector<double>>> y;

  int n_params() const { return n0 * n1 + n1 * n2 + n1 * n1 + n1 + n2; }
  void validate() const;
};

struct RnnThresholds {
  double gamma_y = 0.0;
  double gamma_1 = 0.0;
  double t1 = 0.0;  // w/s layers
  double t2 = 0.0;  // v/r layers
  double K_g = 0.0;
  double K_W = 0.0;  // also the V-layer modulus
  double K_V = 0.0;
  double K_act = 1.0;
};

RnnThresholds rnn_closed_form(double gamma_y, double lambda, int N, int T);
RnnThresholds rnn_thresholds(const RnnSpec& spec);

// Offsets of A, V, W, b, c inside theta (column-major matrices).
struct RnnLayout {
  int A = 0, V = 0, W = 0, b = 0, c = 0, n = 0;
};
RnnLayout rnn_layout(const RnnSpec& spec);

// Layers w_1, s_1, ..., w_T, s_T, v, r; g = |r - y|^2 / (2NT).
CompositeProblem build_problem(const RnnSpec& spec);

// Tangent-cone test written directly in the matrix form of the RNN.
ConeMembership rnn_tangent_cone_check(const RnnSpec& spec, const Point& z, const Direction& d);

// One CSV per sequence: columns t, x_0..x_{n0-1}, y_0..y_{n2-1}; files read in name order.
RnnSpec load_rnn_data(const std::string& dir, int n0, int n1, int n2, double alpha, double lambda,
                      std::optional<int> T = std::nullopt);

// Seeded desk instance: N=1, T=3, n0=2, n1=3, n2=1.
RnnSpec desk_spec(std::uint64_t seed = 2024);

struct RnnReport {
  CompositeProblem problem;
  RnnThresholds thresholds;
  PenaltyConfig cfg;
  Point z;
  SolveTrace trace;
  PolishResult polish;
  double max_residual = 0.0;
  double probe_min = 0.0;
  StationarityReport p0_first, p1_first, p0_second, p1_second;
  SetRelation relation;
  bool identity_holds = false;  // SD0 and D0 agree at the final point
};

RnnReport train_and_certify(const RnnSpec& spec, const std::optional<std::vector<double>>& beta = std::nullopt,
                            const SolveConfig& cfg = {}, const CheckOptions& chk = {});

}  // namespace dstat
