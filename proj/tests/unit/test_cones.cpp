#include "doctest.h"

#include <random>

#include "dstat/cones.hpp"
#include "dstat/repro.hpp"
#include "dstat/rnn.hpp"
#include "fixtures.hpp"

using namespace dstat;

TEST_CASE("ex2 tangent cone at the origin") {
  CompositeProblem p = ex2_problem();
  Point z0 = zeros_like(p);
  auto in = tangent_membership(p, z0, fx::pt({2.0}, {{2.0}, {0.0}}));
  CHECK(in.in_tangent);
  CHECK(in.max_violation == 0.0);
  auto out = tangent_membership(p, z0, fx::pt({2.0}, {{2.0}, {1.0}}));
  CHECK_FALSE(out.in_tangent);
  CHECK(out.worst_layer == 2);
  CHECK(out.max_violation == doctest::Approx(1.0));
  CHECK(out.violation[0][0] == 0.0);
}

TEST_CASE("ex2 radial cone at the origin is trivial") {
  CompositeProblem p = ex2_problem();
  Point z0 = zeros_like(p);
  REQUIRE(radial_decidable(p));
  CHECK(radial_membership(p, z0, fx::pt({1.0}, {{1.0}, {0.0}})) == false);
  CHECK(radial_membership(p, z0, zeros_like(p)) == true);
  CHECK_FALSE(tau_grid_feasible(p, z0, fx::pt({1.0}, {{1.0}, {0.0}})));
}

TEST_CASE("lifted direction") {
  CompositeProblem p = ex2_problem();
  Direction d = lift_direction(p, zeros_like(p), {1.0});
  CHECK(d.theta == std::vector<double>{1.0});
  CHECK(d.u[0] == std::vector<double>{1.0});
  CHECK(d.u[1] == std::vector<double>{0.0});
  Point z = eval_layers(p, {0.5});
  Direction e = lift_direction(p, z, {1.0});
  CHECK(e.u[1][0] == doctest::Approx(1.0));
  CHECK(tangent_membership(p, z, e).in_tangent);
}

TEST_CASE("membership requires a feasible point") {
  CompositeProblem p = ex2_problem();
  CHECK_THROWS_AS(tangent_membership(p, fx::pt({0.0}, {{1.0}, {0.0}}), zeros_like(p)), InfeasiblePointError);
}

TEST_CASE("radial membership on a ReLU chain matches the tau grid") {
  CompositeProblem p = fx::relu_chain();
  Point z = eval_layers(p, {0.0, 0.0});  // both gates at their kinks
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  int agree = 0, tangent = 0;
  for (int k = 0; k < 500; ++k) {
    Direction d = zeros_like(p);
    for (auto& v : d.theta) v = uni(rng);
    for (auto& b : d.u)
      for (auto& v : b) v = uni(rng);
    if (k % 2 == 0) d = lift_direction(p, z, d.theta);
    auto m = tangent_membership(p, z, d);
    bool predicted = m.in_tangent && m.in_radial.value_or(false);
    agree += (predicted == tau_grid_feasible(p, z, d));
    tangent += m.in_tangent;
  }
  CHECK(agree == 500);
  CHECK(tangent == 250);
}

TEST_CASE("tau grid residuals scale like tau^2 off the radial cone") {
  CompositeProblem p = ex2_problem();
  auto res = tau_grid_residuals(p, zeros_like(p), fx::pt({1.0}, {{1.0}, {0.0}}), {1e-2, 1e-3});
  CHECK(res[0] == doctest::Approx(1e-4));
  CHECK(res[1] == doctest::Approx(1e-6));
}

TEST_CASE("rnn: matrix-form cone test agrees with the generic one") {
  RnnSpec s = desk_spec();
  CompositeProblem p = build_problem(s);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> th(p.n);
  for (auto& v : th) v = 0.5 * gauss(rng);
  Point z = eval_layers(p, th);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> dt(p.n);
    for (auto& v : dt) v = gauss(rng);
    Direction d = lift_direction(p, z, dt);
    auto a = tangent_membership(p, z, d);
    auto b = rnn_tangent_cone_check(s, z, d);
    CHECK(a.in_tangent);
    CHECK(b.in_tangent);
    CHECK(b.max_violation <= 1e-12);
    d.u[6][0] += 0.5;  // break the v-equation of step 1
    auto c = rnn_tangent_cone_check(s, z, d);
    CHECK_FALSE(c.in_tangent);
    CHECK(c.worst_layer == 7);
    CHECK(tangent_membership(p, z, d).worst_layer == 7);
  }
}

TEST_CASE("rnn radial directions: no cross terms") {
  RnnSpec s = desk_spec();
  CompositeProblem p = build_problem(s);
  std::vector<double> th(p.n, 0.3);
  Point z = eval_layers(p, th);
  // Move only the biases: the bilinear cross terms vanish.
  RnnLayout lay = rnn_layout(s);
  std::vector<double> dt(p.n, 0.0);
  for (int i = 0; i < s.n1; ++i) dt[lay.b + i] = 1.0;
  dt[lay.c] = -1.0;
  Direction d = lift_direction(p, z, dt);
  auto r = rnn_tangent_cone_check(s, z, d);
  CHECK(r.in_tangent);
  REQUIRE(r.in_radial);
  CHECK(*r.in_radial);
  // A weight direction on W produces D_W d_s != 0.
  std::vector<double> dw(p.n, 0.0);
  dw[lay.W] = 1.0;
  dw[lay.b] = 1.0;
  auto q = rnn_tangent_cone_check(s, z, lift_direction(p, z, dw));
  REQUIRE(q.in_radial);
  CHECK_FALSE(*q.in_radial);
}
