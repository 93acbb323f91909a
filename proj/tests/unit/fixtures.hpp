#pragma once

#include <vector>

#include "dstat/problem.hpp"
#include "dstat/rnn.hpp"

namespace fx {

inline dstat::Point pt(std::vector<double> theta, std::vector<std::vector<double>> u) { return {theta, u}; }

// Feasible smooth instance: u1 = A theta + a, g = |u1 - y|^2, lambda = 0.5.
// Minimizer solves (A'A + lambda I) theta = A'(y - a).
inline dstat::CompositeProblem least_squares() {
  using namespace dstat::ex;
  dstat::CompositeProblem p;
  p.n = 2;
  p.dims = {2};
  p.layers = {{affine({1.0, 2.0}, 0.5, {param(0), param(1)}), affine({-1.0, 1.0}, 0.0, {param(0), param(1)})}};
  p.outer = sqnorm({affine({1.0}, -1.0, {input(1, 0)}), affine({1.0}, -2.0, {input(1, 1)})});
  p.lambda = 0.5;
  p.validate();
  return p;
}

// Pure ReLU instance with polyhedral feasible set: u1 = [theta_1]_+, u2 = [u1 - theta_2]_+.
inline dstat::CompositeProblem relu_chain() {
  using namespace dstat::ex;
  dstat::CompositeProblem p;
  p.n = 2;
  p.dims = {1, 1};
  p.layers = {{plus(param(0))}, {plus(diff(input(1, 0), param(1)))}};
  p.outer = square(affine({1.0}, -1.0, {input(2, 0)}));
  p.lambda = 0.1;
  p.validate();
  return p;
}

// One-neuron recurrent network with hand-picked data.
inline dstat::RnnSpec tiny_rnn() {
  dstat::RnnSpec s;
  s.n0 = s.n1 = s.n2 = 1;
  s.T = 3;
  s.N = 1;
  s.alpha = 0.2;
  s.lambda = 1.0;
  s.x = {{{1.0}, {-0.5}, {2.0}}};
  s.y = {{{1.0}, {-1.0}, {2.0}}};
  return s;
}

}  // namespace fx
