#include "lsysinfer/restricted.hpp"

#include <cmath>
#include <stdexcept>

#include "lsysinfer/lp.hpp"

namespace lsysinfer {

RestrictedEstimate restricted_estimator(const HypothesisProblem& problem,
                                        const StarEstimate& star) {
  problem.validate_shapes();
  const std::size_t p = problem.p(), d = problem.d();
  const double sqrt_n = std::sqrt(static_cast<double>(problem.n));
  const DenseMatrix& a = problem.a;
  const DenseMatrix omega = problem.omega_or_identity();
  const auto unknown = problem.unknown_indices();
  const auto known = problem.known_indices();
  const Vector beta_k = problem.beta_known();

  LPBuilder lp;
  lp.set_maximize(false);
  const int phi1 = lp.add_var(0.0, kInf, 1.0);
  std::vector<int> phi_p(p), phi_d(d), b_u(unknown.size()), x(d);
  for (std::size_t i = 0; i < p; ++i) phi_p[i] = lp.add_var(-kInf, kInf);
  for (std::size_t j = 0; j < d; ++j) phi_d[j] = lp.add_var(0.0, kInf);
  for (std::size_t u = 0; u < unknown.size(); ++u) b_u[u] = lp.add_var(-kInf, kInf);
  for (std::size_t j = 0; j < d; ++j) x[j] = lp.add_var(0.0, kInf);

  // |phi_p|_inf <= phi1
  for (std::size_t i = 0; i < p; ++i) {
    lp.add_row({{phi1, 1.0}, {phi_p[i], -1.0}}, RowSense::Ge, 0.0);
    lp.add_row({{phi1, 1.0}, {phi_p[i], 1.0}}, RowSense::Ge, 0.0);
  }

  // Stationarity of the inner dual:
  // -A' omega phi_p + A'A phi_d + sqrt(n) A_u' b_u = sqrt(n) A'(A x*) - sqrt(n) A_k' beta_k
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t k = 0; k < p; ++k) {
      double coef = 0.0;
      for (std::size_t i = 0; i < p; ++i) coef += a(i, j) * omega(i, k);
      if (coef != 0.0) row.emplace_back(phi_p[k], -coef);
    }
    for (std::size_t m = 0; m < d; ++m) {
      double coef = 0.0;
      for (std::size_t i = 0; i < p; ++i) coef += a(i, j) * a(i, m);
      if (coef != 0.0) row.emplace_back(phi_d[m], coef);
    }
    for (std::size_t u = 0; u < unknown.size(); ++u) {
      const double coef = sqrt_n * a(unknown[u], j);
      if (coef != 0.0) row.emplace_back(b_u[u], coef);
    }
    double rhs = 0.0;
    for (std::size_t i = 0; i < p; ++i) rhs += a(i, j) * star.fitted[i];
    rhs *= sqrt_n;
    for (std::size_t k = 0; k < known.size(); ++k)
      rhs -= sqrt_n * a(known[k], j) * beta_k[k];
    lp.add_row(row, RowSense::Eq, rhs);
  }

  // Ax = b with the known block pinned at beta_k.
  for (std::size_t u = 0; u < unknown.size(); ++u) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t j = 0; j < d; ++j)
      if (a(unknown[u], j) != 0.0) row.emplace_back(x[j], a(unknown[u], j));
    row.emplace_back(b_u[u], -1.0);
    lp.add_row(row, RowSense::Eq, 0.0);
  }
  for (std::size_t k = 0; k < known.size(); ++k) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t j = 0; j < d; ++j)
      if (a(known[k], j) != 0.0) row.emplace_back(x[j], a(known[k], j));
    lp.add_row(row, RowSense::Eq, beta_k[k]);
  }

  const LPSolution sol = lp.solve();
  if (sol.status == LPStatus::Infeasible)
    throw std::runtime_error(
        "restricted estimator infeasible: no x >= 0 matches the known block "
        "(the null is vacuous at these known values)");
  if (sol.status != LPStatus::Optimal)
    throw std::runtime_error("restricted estimator: LP unbounded (internal error)");

  RestrictedEstimate out;
  out.outer_value = sol.value;
  out.witness_x.resize(d);
  for (std::size_t j = 0; j < d; ++j) out.witness_x[j] = sol.point[static_cast<std::size_t>(x[j])];
  out.beta_r.assign(p, 0.0);
  for (std::size_t u = 0; u < unknown.size(); ++u)
    out.beta_r[unknown[u]] = sol.point[static_cast<std::size_t>(b_u[u])];
  for (std::size_t k = 0; k < known.size(); ++k) out.beta_r[known[k]] = beta_k[k];
  return out;
}

Vector upper_bound_term(double lambda_n, const RestrictedEstimate& restricted,
                        const HypothesisProblem& problem) {
  const double scale = lambda_n * std::sqrt(static_cast<double>(problem.n));
  Vector out = problem.a.apply(restricted.witness_x);
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace lsysinfer
