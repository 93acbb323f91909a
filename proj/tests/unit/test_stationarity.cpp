#include "doctest.h"

#include "dstat/cones.hpp"
#include "dstat/dcalc.hpp"
#include "dstat/repro.hpp"
#include "dstat/stationarity.hpp"
#include "fixtures.hpp"

using namespace dstat;

namespace {

// (-15/17, 12/17) minimizes |A theta + a - y|^2 + 0.5 |theta|^2 for the fixture.
const std::vector<double> kLsMin{-15.0 / 17.0, 12.0 / 17.0};

PenaltyConfig config(const CompositeProblem& p, std::vector<double> beta) {
  PenaltyConfig c = make_penalty_config(p, beta);
  return c;
}

}  // namespace

TEST_CASE("verdict and target names") {
  CHECK(std::string(verdict_name(Verdict::NotStationary)) == "not-stationary");
  CHECK(target_from_name("p1") == Target::P1);
  CHECK(target_from_name("P0") == Target::P0);
  CHECK(mode_from_name("enumerate") == SearchMode::Enumerate);
  CHECK_THROWS(target_from_name("p2"));
}

TEST_CASE("ReLU gate at zero: descent along the first coordinate") {
  CompositeProblem p = appendix_a_problem();
  auto r = check_d_stationary_P(p, {0.0, 0.0});
  CHECK(r.verdict == Verdict::NotStationary);
  CHECK(r.witness_value == doctest::Approx(-2.0).epsilon(1e-12));
  REQUIRE(r.witness_reduced.size() == 2);
  CHECK(r.witness_reduced[0] > 0.0);
  CHECK(r.mode == "exhaustive");
}

TEST_CASE("planted smooth descent: witness value is -|grad|_1") {
  CompositeProblem p = fx::least_squares();
  auto r = check_d_stationary_P(p, {0.0, 0.0});
  CHECK(r.verdict == Verdict::NotStationary);
  // grad at 0: 2 A'(a - y) = (3, -6).
  CHECK(r.witness_value == doctest::Approx(-9.0).epsilon(1e-10));
  CHECK(r.witness_reduced == std::vector<double>{-1.0, 1.0});
  CHECK(check_d_stationary_P(p, kLsMin).verdict == Verdict::Stationary);
}

TEST_CASE("ex2 origin: first-order memberships") {
  CompositeProblem p = ex2_problem();
  Point z0 = zeros_like(p);
  CHECK(check_d_stationary_P0(p, z0).verdict == Verdict::Stationary);
  CHECK(check_d_stationary_P1(p, z0, {1.0, 0.6}).verdict == Verdict::Stationary);
  CHECK_THROWS_AS(check_d_stationary_P0(p, fx::pt({0.0}, {{1.0}, {0.0}})), InfeasiblePointError);
}

TEST_CASE("ex2 origin: second-order split between lifted and penalized") {
  CompositeProblem p = ex2_problem();
  Point z0 = zeros_like(p);
  auto sd0 = check_second_order(p, z0, Target::P0, std::nullopt);
  CHECK(sd0.verdict == Verdict::Stationary);
  auto sd1 = check_second_order(p, z0, Target::P1, std::vector<double>{1.0, 0.6});
  CHECK(sd1.verdict == Verdict::NotStationary);
  REQUIRE(sd1.witness);
  double t = sd1.witness->theta[0];
  CHECK(sd1.witness->u[0][0] == doctest::Approx(t));
  CHECK(sd1.witness->u[1][0] == doctest::Approx(0.0));
  CHECK(sd1.witness_value == doctest::Approx(-0.78 * t * t).epsilon(1e-9));
  CHECK_THROWS(check_second_order(p, z0, Target::P1, std::nullopt));
}

TEST_CASE("infeasible points are not penalty-stationary") {
  CompositeProblem p = ex2_problem();
  std::vector<double> beta{1.0, 0.6};
  for (Point z : {fx::pt({0.0}, {{0.01}, {0.0}}), fx::pt({0.2}, {{0.2}, {0.5}})}) {
    auto r = check_d_stationary_P1(p, z, beta);
    CHECK(r.verdict == Verdict::NotStationary);
    REQUIRE(r.witness);
    CHECK(dd_Theta(p, z, *r.witness, beta, 1).first == doctest::Approx(r.witness_value));
    CHECK(r.witness_value <= dd_Theta(p, z, lemma34_direction(p, z), beta, 1).first / max_abs(lemma34_direction(p, z)) + 1e-12);
  }
}

TEST_CASE("non-stationary smooth point through the lift") {
  CompositeProblem p = fx::least_squares();
  Point z = eval_layers(p, {0.3, -0.2});
  auto r0 = check_d_stationary_P0(p, z);
  CHECK(r0.verdict == Verdict::NotStationary);
  REQUIRE(r0.witness);
  CHECK(tangent_membership(p, z, *r0.witness).in_tangent);
  CHECK(check_d_stationary_P0(p, eval_layers(p, kLsMin)).verdict == Verdict::Stationary);
}

TEST_CASE("enumeration and sampling agree") {
  CompositeProblem p = appendix_a_problem();
  CheckOptions en, sa;
  en.mode = SearchMode::Enumerate;
  sa.mode = SearchMode::Sample;
  auto a = check_d_stationary_P(p, {0.0, 0.0}, en);
  auto b = check_d_stationary_P(p, {0.0, 0.0}, sa);
  CHECK(a.verdict == b.verdict);
  CHECK(a.mode == "exhaustive");
  CHECK(b.mode == "sampled");
  CHECK(b.witness_value == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("box instance: three first-order stationary points") {
  BoxProblem bp = example3_box();
  auto o1 = check_box_stationarity(bp, {0.0, 0.0}, 1);
  auto o2 = check_box_stationarity(bp, {0.0, 0.0}, 2);
  CHECK(o1.verdict == Verdict::Stationary);
  CHECK(o2.verdict == Verdict::NotStationary);
  CHECK(o2.witness_value == doctest::Approx(-1.6).epsilon(1e-9));
  REQUIRE(o2.witness_reduced.size() == 2);
  CHECK(o2.witness_reduced[0] == doctest::Approx(-o2.witness_reduced[1]));
  for (auto x : {std::vector<double>{-1.0, 1.0}, std::vector<double>{1.0, -1.0}}) {
    CHECK(check_box_stationarity(bp, x, 1).verdict == Verdict::Stationary);
    CHECK(check_box_stationarity(bp, x, 2).verdict == Verdict::Stationary);
  }
  CHECK(check_box_stationarity(bp, {1.0, 1.0}, 1).verdict == Verdict::NotStationary);
  CHECK(check_box_stationarity(bp, {0.5, 0.0}, 1).verdict == Verdict::NotStationary);
}

TEST_CASE("sufficient condition for a strong local minimizer") {
  CompositeProblem ls = fx::least_squares();
  PenaltyConfig c = config(ls, {10.0});
  REQUIRE(c.certified);
  auto ok = check_strong_local_min_sufficient(ls, eval_layers(ls, kLsMin), c);
  CHECK(ok.verdict == "sufficient-holds");

  CompositeProblem p = ex2_problem();
  PenaltyConfig c2 = config(p, {1.0, 0.6});
  REQUIRE(c2.certified);
  auto bad = check_strong_local_min_sufficient(p, zeros_like(p), c2);
  CHECK(bad.verdict == "fails");
  PenaltyConfig weak = c2;
  weak.certified = false;
  CHECK_THROWS(check_strong_local_min_sufficient(p, zeros_like(p), weak));
}

TEST_CASE("set relations at the ex2 origin") {
  CompositeProblem p = ex2_problem();
  PenaltyConfig c = config(p, {1.0, 0.6});
  SetRelation r = compare_sets_on_point(p, zeros_like(p), c);
  CHECK(r.feasible);
  CHECK(r.in_level_set);
  CHECK(r.in_D0);
  CHECK(r.in_D1);
  CHECK(r.in_SD0);
  CHECK_FALSE(r.in_SD1);
  CHECK(r.consistent);
}
