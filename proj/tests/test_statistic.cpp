#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "lsysinfer/statistic.hpp"

using namespace lsysinfer;

namespace {

HypothesisProblem identity_problem(Vector beta, long n) {
  HypothesisProblem p;
  p.a = DenseMatrix::identity(beta.size());
  p.beta_hat = std::move(beta);
  p.known_mask.assign(p.beta_hat.size(), 0);
  p.n = n;
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("statistic");

TEST_CASE("x_star: least-norm branch for full-rank wide A") {
  const HypothesisProblem p = identity_problem({1.0, 2.0}, 100);
  const StarEstimate star = estimate_x_star(p);
  CHECK(star.method == StarMethod::PinvLeastNorm);
  CHECK(star.x_star[0] == doctest::Approx(1.0));
  CHECK(star.x_star[1] == doctest::Approx(2.0));
  CHECK(star.fitted == star.x_star);
}

TEST_CASE("x_star: GLS branch when p > d") {
  // Two noisy measurements of the same scalar, identity weights: mean.
  HypothesisProblem p;
  p.a = DenseMatrix(2, 1, {1, 1});
  p.beta_hat = {1.0, 2.0};
  p.known_mask = {0, 0};
  p.n = 25;
  const StarEstimate star = estimate_x_star(p);
  CHECK(star.method == StarMethod::ConstrainedGLS);
  CHECK(star.x_star[0] == doctest::Approx(1.5));

  // Unequal variances tilt toward the precise coordinate.
  p.xi_hat = DenseMatrix(2, 2, {1.0, 0.0, 0.0, 4.0});
  const StarEstimate weighted = estimate_x_star(p);
  // Weights 1 and 1/4: (1*1 + 0.25*2) / 1.25 = 1.2.
  CHECK(weighted.x_star[0] == doctest::Approx(1.2));
}

TEST_CASE("x_star: known rows bind in the GLS branch") {
  HypothesisProblem p;
  p.a = DenseMatrix(2, 1, {1, 1});
  p.beta_hat = {1.0, 2.0};
  p.known_mask = {0, 1};
  p.n = 25;
  const StarEstimate star = estimate_x_star(p);
  CHECK(star.x_star[0] == doctest::Approx(2.0));
  CHECK(star.fitted[1] == doctest::Approx(2.0));
}

TEST_CASE("t_stat_equality") {
  // Degenerate regime: identically zero.
  const HypothesisProblem sq = identity_problem({-5.0, 3.0}, 100);
  CHECK(t_stat_equality(sq, estimate_x_star(sq)) == 0.0);

  // p > d: sqrt(n) * max residual after projection.
  HypothesisProblem p;
  p.a = DenseMatrix(2, 1, {1, 1});
  p.beta_hat = {1.0, 2.0};
  p.known_mask = {0, 0};
  p.n = 16;
  const StarEstimate star = estimate_x_star(p);
  CHECK(t_stat_equality(p, star) == doctest::Approx(4.0 * 0.5));
}

TEST_CASE("xi_half_pinv inverts on the range only") {
  DenseMatrix xi(2, 2, {4.0, 0.0, 0.0, 0.0});
  const DenseMatrix w = xi_half_pinv(xi);
  CHECK(w(0, 0) == doctest::Approx(0.5));
  CHECK(w(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("t_stat_inequality: zero inside the cone, positive outside") {
  const HypothesisProblem inside = identity_problem({1.0, 1.0}, 100);
  CHECK(t_stat_inequality(inside, estimate_x_star(inside)) == doctest::Approx(0.0));

  // beta = (-1, 0), n = 4: optimum at s = (-1, 0), value sqrt(n) * 1 = 2.
  const HypothesisProblem outside = identity_problem({-1.0, 0.0}, 4);
  CHECK(t_stat_inequality(outside, estimate_x_star(outside)) == doctest::Approx(2.0));
}

TEST_CASE("omega scaling changes the inequality statistic") {
  // Doubling omega halves the feasible s, halving the optimum.
  HypothesisProblem p = identity_problem({-1.0, 0.0}, 4);
  p.omega_i = DenseMatrix(2, 2, {2.0, 0.0, 0.0, 2.0});
  CHECK(t_stat_inequality(p, estimate_x_star(p)) == doctest::Approx(1.0));
}

TEST_CASE("cone program throws when the omega kernel meets the cone") {
  // omega = 0 leaves s unconstrained in norm; negative beta drives it off.
  HypothesisProblem p = identity_problem({-1.0, 0.0}, 4);
  p.omega_i = DenseMatrix(2, 2, 0.0);
  CHECK_THROWS_WITH_AS(t_stat_inequality(p, estimate_x_star(p)),
                       doctest::Contains("unbounded"), std::runtime_error);
}

TEST_CASE("compute_statistic takes the max") {
  HypothesisProblem p;
  p.a = DenseMatrix(2, 1, {1, 1});
  p.beta_hat = {1.0, 2.0};
  p.known_mask = {0, 0};
  p.n = 16;
  const StatisticValue v = compute_statistic(p, estimate_x_star(p));
  CHECK(v.t_n == doctest::Approx(std::max(v.t_e, v.t_i)));
  CHECK(v.t_e == doctest::Approx(2.0));
  CHECK(v.t_i >= 0.0);
}

TEST_CASE("x = Ax cone constraint matters when A is rank deficient") {
  // A maps onto the diagonal line; s must live there too.
  HypothesisProblem p;
  p.a = DenseMatrix(2, 2, {1, 1, 1, 1});
  p.beta_hat = {-1.0, 1.0};
  p.known_mask = {0, 0};
  p.n = 4;
  const StarEstimate star = estimate_x_star(p);
  CHECK(star.method == StarMethod::ConstrainedGLS);
  // x* solves GLS onto the diagonal: fitted = (0, 0), so T_i = 0.
  CHECK(t_stat_inequality(p, star) == doctest::Approx(0.0));
  CHECK(t_stat_equality(p, star) == doctest::Approx(2.0));
}

TEST_CASE("population_feasible matches the cone geometry") {
  DenseMatrix a(2, 2, {1, 0, 0, 1});
  CHECK(population_feasible(a, {0.5, 0.0}));
  CHECK_FALSE(population_feasible(a, {-0.5, 0.0}));
}

TEST_SUITE_END();
