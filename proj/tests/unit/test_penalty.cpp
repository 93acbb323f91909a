#include "doctest.h"

#include <cmath>

#include "dstat/dcalc.hpp"
#include "dstat/penalty.hpp"
#include "dstat/repro.hpp"
#include "dstat/rnn.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dstat;

TEST_CASE("threshold product formula") {
  CHECK(thresholds(0.7, {}) == std::vector<double>{0.7});
  auto t = thresholds(2.0, {0.5, 3.0});
  REQUIRE(t.size() == 3);
  CHECK(t[0] == doctest::Approx(2.0 * 1.5 * 4.0));
  CHECK(t[1] == doctest::Approx(2.0 * 4.0));
  CHECK(t[2] == 2.0);
}

TEST_CASE("rnn closed form for gamma_y = 1, lambda = 1") {
  RnnThresholds r = rnn_closed_form(1.0, 1.0, 1, 3);
  CHECK(r.gamma_1 == 3.0);
  CHECK(r.t1 == doctest::Approx(3.0 * std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(r.t2 == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(r.K_g == r.t2);
  CHECK(r.K_W == 1.0);
  CHECK(r.K_act == 1.0);
  // Data with |y|^2 = 6 gives gamma_y = 1.
  RnnThresholds s = rnn_thresholds(fx::tiny_rnn());
  CHECK(s.gamma_y == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(s.t1 - 2.449489742783178) <= 1e-12);
  CHECK(std::abs(s.t2 - 0.816496580927726) <= 1e-12);
}

TEST_CASE("rnn thresholds match independent arithmetic") {
  for (std::uint64_t seed : {1u, 2024u, 99u}) {
    RnnSpec s = desk_spec(seed);
    double ss = 0.0;
    for (const auto& yt : s.y[0]) ss += yt[0] * yt[0];
    auto ref = oracle::rnn_thresholds(ss, s.lambda, 1, 3);
    RnnThresholds t = rnn_thresholds(s);
    CHECK(std::abs(t.t1 - ref.t1) <= 1e-12);
    CHECK(std::abs(t.t2 - ref.t2) <= 1e-12);
  }
}

TEST_CASE("ex2 moduli and certification") {
  CompositeProblem p = ex2_problem();
  std::vector<double> beta{1.0, 0.6};
  auto [z0, gamma] = reference_point_and_level(p, beta);
  Moduli m = estimate_moduli(p, beta, gamma);
  CHECK(m.K_g > 0.0);
  CHECK(m.K_g <= 0.5386);
  REQUIRE(m.K.size() == 1);
  CHECK(m.K[0] > 0.0);
  CHECK(m.K[0] <= 0.21);
  CHECK(m.heuristic);
  PenaltyConfig c = certify(p, beta, m, gamma);
  CHECK(c.thresholds[0] < 1.0);
  CHECK(c.thresholds[1] < 0.6);
  CHECK(c.certified);
  CHECK_FALSE(certify(p, {0.1, 0.6}, m, gamma).certified);
}

TEST_CASE("rnn moduli come from the closed form") {
  RnnSpec s = fx::tiny_rnn();
  CompositeProblem p = build_problem(s);
  RnnThresholds t = rnn_thresholds(s);
  std::vector<double> beta(p.L());
  for (int l = 1; l <= p.L(); ++l) beta[l - 1] = 1.05 * (l <= 2 * s.T ? t.t1 : t.t2);
  PenaltyConfig c = make_penalty_config(p, beta);
  CHECK(c.certified);
  CHECK_FALSE(c.heuristic);
  CHECK(c.thresholds.front() == doctest::Approx(t.t1));
  CHECK(c.thresholds.back() == doctest::Approx(t.t2));
}

TEST_CASE("level-set samples stay in the level set") {
  CompositeProblem p = ex2_problem();
  std::vector<double> beta{1.0, 0.6};
  auto [z0, gamma] = reference_point_and_level(p, beta);
  auto pts = sample_level_set(p, beta, gamma, 20, 3);
  CHECK(pts.size() == 20);
  for (const auto& z : pts) CHECK(eval_Theta(p, z, beta) <= gamma * (1.0 + 1e-12));
}

TEST_CASE("correction direction decreases the penalty function") {
  CompositeProblem p = ex2_problem();
  std::vector<double> beta{1.0, 0.6};
  // Small infeasibility near the origin.
  Point z = fx::pt({0.001}, {{0.0015}, {0.0}});
  Direction d = lemma34_direction(p, z);
  CHECK(d.theta[0] == 0.0);
  CHECK(d.u[1][0] == doctest::Approx(2.25e-6));  // rho_2 = -u1^2
  CHECK(dd_Theta(p, z, d, beta, 1).first < 0.0);
  Direction d1 = lemma34_direction(p, z, 1);
  CHECK(d1.u[0][0] == doctest::Approx(-0.0005));
  CHECK(d1.u[1][0] == doctest::Approx(2.0 * 0.0015 * -0.0005));
  CHECK_THROWS(lemma34_direction(p, zeros_like(p)));
}

TEST_CASE("exactness verdicts") {
  CompositeProblem p = ex2_problem();
  PenaltyConfig c = make_penalty_config(p, {1.0, 0.6});
  REQUIRE(c.certified);
  auto v = check_exactness_feasibility(p, zeros_like(p), c);
  CHECK(v.in_level_set);
  CHECK(v.verdict == "feasible");
  auto far = check_exactness_feasibility(p, fx::pt({0.0}, {{0.5}, {0.0}}), c);
  CHECK(far.verdict == "outside-level-set");
  PenaltyConfig weak = c;
  weak.certified = false;
  CHECK(check_exactness_feasibility(p, zeros_like(p), weak).verdict == "uncertified");
}
