#include <doctest.h>

#include <stdexcept>

#include "lsysinfer/lp.hpp"

using namespace lsysinfer;

TEST_SUITE_BEGIN("lp");

TEST_CASE("builder solves a small max problem") {
  // max x + y s.t. x + y <= 1, x,y >= 0
  LPBuilder lp;
  const int x = lp.add_var(0.0, kInf, 1.0);
  const int y = lp.add_var(0.0, kInf, 1.0);
  lp.add_row({{x, 1.0}, {y, 1.0}}, RowSense::Le, 1.0);
  const LPSolution sol = lp.solve();
  REQUIRE(sol.status == LPStatus::Optimal);
  CHECK(sol.value == doctest::Approx(1.0));
  CHECK(sol.point[0] + sol.point[1] == doctest::Approx(1.0));
}

TEST_CASE("minimization with Ge rows and free variables") {
  // min z s.t. z >= x, z >= -x, x = -3  ->  z = 3
  LPBuilder lp;
  lp.set_maximize(false);
  const int z = lp.add_var(0.0, kInf, 1.0);
  const int x = lp.add_var(-kInf, kInf);
  lp.add_row({{z, 1.0}, {x, -1.0}}, RowSense::Ge, 0.0);
  lp.add_row({{z, 1.0}, {x, 1.0}}, RowSense::Ge, 0.0);
  lp.add_row({{x, 1.0}}, RowSense::Eq, -3.0);
  const LPSolution sol = lp.solve();
  REQUIRE(sol.status == LPStatus::Optimal);
  CHECK(sol.value == doctest::Approx(3.0));
  CHECK(sol.point[1] == doctest::Approx(-3.0));
}

TEST_CASE("infeasible and unbounded statuses") {
  {
    LPBuilder lp;
    const int x = lp.add_var(0.0, kInf, 1.0);
    lp.add_row({{x, 1.0}}, RowSense::Eq, -1.0);
    CHECK(lp.solve().status == LPStatus::Infeasible);
  }
  {
    LPBuilder lp;
    lp.add_var(0.0, kInf, 1.0);  // max x, x unbounded above
    CHECK(lp.solve().status == LPStatus::Unbounded);
  }
}

TEST_CASE("box bounds are honored") {
  // min x over x in [1, 2]
  LPBuilder lp;
  lp.set_maximize(false);
  lp.add_var(1.0, 2.0, 1.0);
  const LPSolution sol = lp.solve();
  REQUIRE(sol.status == LPStatus::Optimal);
  CHECK(sol.value == doctest::Approx(1.0));

  // Empty box is infeasible.
  LPBuilder bad;
  bad.add_var(2.0, 1.0, 1.0);
  CHECK(bad.solve().status == LPStatus::Infeasible);
}

TEST_CASE("negative-upper-bound variables") {
  // max x over x in (-inf, -2]: shifted/negated variable paths.
  LPBuilder lp;
  lp.add_var(-kInf, -2.0, 1.0);
  const LPSolution sol = lp.solve();
  REQUIRE(sol.status == LPStatus::Optimal);
  CHECK(sol.value == doctest::Approx(-2.0));
  CHECK(sol.point[0] == doctest::Approx(-2.0));
}

TEST_CASE("degenerate problem terminates (Bland)") {
  // Classic degeneracy: multiple identical constraints through the origin.
  LPBuilder lp;
  const int x = lp.add_var(0.0, kInf, 1.0);
  const int y = lp.add_var(0.0, kInf, 2.0);
  lp.add_row({{x, 1.0}, {y, 1.0}}, RowSense::Le, 0.0);
  lp.add_row({{x, 2.0}, {y, 1.0}}, RowSense::Le, 0.0);
  lp.add_row({{x, 1.0}, {y, 2.0}}, RowSense::Le, 0.0);
  const LPSolution sol = lp.solve();
  REQUIRE(sol.status == LPStatus::Optimal);
  CHECK(sol.value == doctest::Approx(0.0));
}

TEST_CASE("redundant equality rows") {
  LPBuilder lp;
  lp.set_maximize(false);
  const int x = lp.add_var(0.0, kInf, 1.0);
  lp.add_row({{x, 1.0}}, RowSense::Eq, 2.0);
  lp.add_row({{x, 2.0}}, RowSense::Eq, 4.0);
  const LPSolution sol = lp.solve();
  REQUIRE(sol.status == LPStatus::Optimal);
  CHECK(sol.point[0] == doctest::Approx(2.0));
}

TEST_CASE("feasible_cone_point") {
  DenseMatrix a = DenseMatrix::identity(2);
  const auto good = feasible_cone_point(a, {1.0, 2.0});
  REQUIRE(good.has_value());
  CHECK((*good)[0] == doctest::Approx(1.0));
  CHECK((*good)[1] == doctest::Approx(2.0));
  CHECK_FALSE(feasible_cone_point(a, {-1.0, 0.0}).has_value());

  // beta outside range(A): infeasible.
  DenseMatrix wide(2, 1, {1, 1});
  CHECK(feasible_cone_point(wide, {1.0, 1.0}).has_value());
  CHECK_FALSE(feasible_cone_point(wide, {1.0, 2.0}).has_value());
}

TEST_CASE("determinism: identical inputs give identical pivots") {
  auto build = [] {
    LPBuilder lp;
    const int x = lp.add_var(0.0, kInf, 3.0);
    const int y = lp.add_var(0.0, kInf, 2.0);
    const int z = lp.add_var(0.0, kInf, 4.0);
    lp.add_row({{x, 1.0}, {y, 1.0}, {z, 1.0}}, RowSense::Le, 10.0);
    lp.add_row({{x, 2.0}, {y, 1.0}}, RowSense::Le, 8.0);
    lp.add_row({{y, 1.0}, {z, 2.0}}, RowSense::Le, 7.0);
    return lp.solve();
  };
  const LPSolution a = build();
  const LPSolution b = build();
  CHECK(a.value == b.value);
  CHECK(a.iterations == b.iterations);
  CHECK(a.point == b.point);
}

TEST_SUITE_END();
