#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "lsysinfer/restricted.hpp"

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

// Brute-force oracle for A = I: min over b >= 0 on a grid of the inner
// cone-program value at objective sqrt(n)(x* - b).
double grid_oracle(const HypothesisProblem& p, const StarEstimate& star, double hi, double step) {
  const ConeProgram cone(p.a, p.omega_or_identity(), star.method == StarMethod::PinvLeastNorm);
  const double sqrt_n = std::sqrt(static_cast<double>(p.n));
  double best = 1e300;
  for (double b0 = 0.0; b0 <= hi; b0 += step)
    for (double b1 = 0.0; b1 <= hi; b1 += step) {
      const Vector obj = {sqrt_n * (star.fitted[0] - b0), sqrt_n * (star.fitted[1] - b1)};
      best = std::min(best, cone.value(obj));
    }
  return best;
}

}  // namespace

TEST_SUITE_BEGIN("restricted");

TEST_CASE("feasible beta gives a zero outer value") {
  const HypothesisProblem p = identity_problem({0.5, 0.2}, 100);
  const StarEstimate star = estimate_x_star(p);
  const RestrictedEstimate r = restricted_estimator(p, star);
  CHECK(r.outer_value == doctest::Approx(0.0).epsilon(1e-8));
  for (double x : r.witness_x) CHECK(x >= -1e-9);
  const Vector fitted = p.a.apply(r.witness_x);
  for (std::size_t i = 0; i < 2; ++i) CHECK(fitted[i] == doctest::Approx(r.beta_r[i]));
}

TEST_CASE("negative coordinate forces a positive outer value") {
  // x* = (0.5, -0.3): the nearest cone point in the inner norm leaves 0.3.
  const HypothesisProblem p = identity_problem({0.5, -0.3}, 1);
  const StarEstimate star = estimate_x_star(p);
  const RestrictedEstimate r = restricted_estimator(p, star);
  CHECK(r.outer_value == doctest::Approx(0.3).epsilon(1e-7));
  CHECK(r.outer_value == doctest::Approx(grid_oracle(p, star, 1.0, 0.05)).epsilon(1e-6));
  for (double x : r.witness_x) CHECK(x >= -1e-9);
}

TEST_CASE("outer value scales with sqrt(n)") {
  const HypothesisProblem p = identity_problem({0.5, -0.3}, 25);
  const StarEstimate star = estimate_x_star(p);
  const RestrictedEstimate r = restricted_estimator(p, star);
  CHECK(r.outer_value == doctest::Approx(5.0 * 0.3).epsilon(1e-7));
}

TEST_CASE("grid oracle agreement on a random-ish instance") {
  HypothesisProblem p = identity_problem({0.7, -0.1}, 9);
  p.omega_i = DenseMatrix(2, 2, {2.0, 0.5, 0.5, 1.0});
  const StarEstimate star = estimate_x_star(p);
  const RestrictedEstimate r = restricted_estimator(p, star);
  const double oracle = grid_oracle(p, star, 1.5, 0.025);
  CHECK(r.outer_value <= oracle + 1e-6);
  CHECK(r.outer_value >= oracle - 0.08);  // grid resolution slack
}

TEST_CASE("known block is pinned in beta_r") {
  HypothesisProblem p = identity_problem({0.5, 0.2}, 100);
  p.known_mask = {0, 1};
  const StarEstimate star = estimate_x_star(p);
  const RestrictedEstimate r = restricted_estimator(p, star);
  CHECK(r.beta_r[1] == doctest::Approx(0.2));
  CHECK(r.outer_value == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(r.witness_x[1] == doctest::Approx(0.2));
}

TEST_CASE("infeasible known block throws") {
  // Row 2 demands -x = 1, impossible with x >= 0.
  HypothesisProblem p;
  p.a = DenseMatrix(2, 1, {1, -1});
  p.beta_hat = {0.0, 1.0};
  p.known_mask = {0, 1};
  p.n = 10;
  const StarEstimate star = estimate_x_star(p);
  CHECK_THROWS_AS(restricted_estimator(p, star), std::runtime_error);
}

TEST_CASE("upper_bound_term scales lambda sqrt(n) A witness") {
  const HypothesisProblem p = identity_problem({0.5, 0.2}, 16);
  const StarEstimate star = estimate_x_star(p);
  const RestrictedEstimate r = restricted_estimator(p, star);
  const Vector zero = upper_bound_term(0.0, r, p);
  for (double v : zero) CHECK(v == 0.0);
  const Vector half = upper_bound_term(0.5, r, p);
  const Vector fitted = p.a.apply(r.witness_x);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(half[i] == doctest::Approx(0.5 * 4.0 * fitted[i]));
}

TEST_SUITE_END();
