#include "lsysinfer/statistic.hpp"

#include <cmath>
#include <stdexcept>

namespace lsysinfer {

namespace {

Vector svd_apply_pinv(const SvdResult& f, const Vector& b) {
  const double cutoff = kRankTolerance * (f.sigma.empty() ? 0.0 : f.sigma.front());
  Vector x(f.v.rows(), 0.0);
  for (std::size_t k = 0; k < f.sigma.size(); ++k) {
    if (f.sigma[k] <= cutoff || f.sigma[k] == 0.0) break;
    double uk_b = 0.0;
    for (std::size_t i = 0; i < f.u.rows(); ++i) uk_b += f.u(i, k) * b[i];
    const double coef = uk_b / f.sigma[k];
    for (std::size_t j = 0; j < f.v.rows(); ++j) x[j] += f.v(j, k) * coef;
  }
  return x;
}

}  // namespace

StarSolver::StarSolver(const HypothesisProblem& problem) : a_(problem.a) {
  problem.validate_shapes();
  const std::size_t p = problem.p(), d = problem.d();
  unknown_ = problem.unknown_indices();
  known_ = problem.known_indices();
  beta_known_ = problem.beta_known();

  a_svd_ = svd(a_);
  const double cutoff = kRankTolerance * (a_svd_.sigma.empty() ? 0.0 : a_svd_.sigma.front());
  std::size_t rank = 0;
  for (double s : a_svd_.sigma)
    if (s > cutoff && s > 0.0) ++rank;

  if (d >= p && rank == p) {
    method_ = StarMethod::PinvLeastNorm;
    return;
  }
  method_ = StarMethod::ConstrainedGLS;

  const DenseMatrix au = problem.a_unknown();
  const DenseMatrix ak = problem.a_known();
  const DenseMatrix xi_pinv = psd_pinv(problem.xi_or_identity());
  au_t_xi_pinv_ = au.transpose().multiply(xi_pinv);
  const DenseMatrix q = au_t_xi_pinv_.multiply(au);

  const std::size_t m = ak.rows();
  DenseMatrix kkt(d + m, d + m);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) kkt(i, j) = 2.0 * q(i, j);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      kkt(d + i, j) = ak(i, j);
      kkt(j, d + i) = ak(i, j);
    }
  kkt_svd_ = svd(kkt);
}

StarEstimate StarSolver::estimate(const Vector& beta_hat) const {
  StarEstimate out;
  out.method = method_;
  if (method_ == StarMethod::PinvLeastNorm) {
    out.x_star = svd_apply_pinv(a_svd_, beta_hat);
  } else {
    Vector beta_u;
    beta_u.reserve(unknown_.size());
    for (std::size_t i : unknown_) beta_u.push_back(beta_hat[i]);
    const Vector c = au_t_xi_pinv_.apply(beta_u);
    const std::size_t d = a_.cols(), m = known_.size();
    Vector rhs(d + m, 0.0);
    for (std::size_t j = 0; j < d; ++j) rhs[j] = 2.0 * c[j];
    for (std::size_t i = 0; i < m; ++i) rhs[d + i] = beta_known_[i];
    const Vector z = svd_apply_pinv(kkt_svd_, rhs);
    out.x_star.assign(z.begin(), z.begin() + static_cast<long>(d));
  }
  out.fitted = a_.apply(out.x_star);
  if (method_ == StarMethod::ConstrainedGLS) {
    for (std::size_t i = 0; i < known_.size(); ++i)
      if (std::fabs(out.fitted[known_[i]] - beta_known_[i]) > 1e-8)
        throw std::runtime_error("estimate_x_star: known-block constraints inconsistent");
  }
  return out;
}

StarEstimate estimate_x_star(const HypothesisProblem& problem) {
  return StarSolver(problem).estimate(problem.beta_hat);
}

DenseMatrix xi_half_pinv(const DenseMatrix& xi) {
  const SpectralFactorization f = eig_sym(xi);
  const std::size_t n = xi.rows();
  DenseMatrix w(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double ev = f.eigenvalues[k];
        if (ev > f.tolerance)
          acc += f.eigenvectors(i, k) * (1.0 / std::sqrt(ev)) * f.eigenvectors(j, k);
      }
      w(i, j) = acc;
      w(j, i) = acc;
    }
  return w;
}

double t_stat_equality(const HypothesisProblem& problem, const StarEstimate& star) {
  if (star.method == StarMethod::PinvLeastNorm) return 0.0;
  const auto unknown = problem.unknown_indices();
  Vector resid(unknown.size());
  for (std::size_t k = 0; k < unknown.size(); ++k)
    resid[k] = problem.beta_hat[unknown[k]] - star.fitted[unknown[k]];
  const DenseMatrix w = xi_half_pinv(problem.xi_or_identity());
  return std::sqrt(static_cast<double>(problem.n)) * inf_norm(w.apply(resid));
}

ConeProgram::ConeProgram(const DenseMatrix& a, const DenseMatrix& omega, bool drop_x)
    : a_(a), omega_(omega), drop_x_(drop_x) {
  if (omega_.rows() != a_.rows() || omega_.cols() != a_.rows())
    throw std::invalid_argument("ConeProgram: omega dimension != p");
}

double ConeProgram::run(const Vector& objective, const Vector* cap, double cap_offset) const {
  const std::size_t p = a_.rows(), d = a_.cols();
  if (objective.size() != p) throw std::invalid_argument("ConeProgram: objective length != p");

  LPBuilder lp;
  lp.set_maximize(true);
  std::vector<int> s(p), phi_pos(p), phi_neg(p);
  for (std::size_t i = 0; i < p; ++i) s[i] = lp.add_var(-kInf, kInf, objective[i]);
  for (std::size_t i = 0; i < p; ++i) phi_pos[i] = lp.add_var(0.0, kInf);
  for (std::size_t i = 0; i < p; ++i) phi_neg[i] = lp.add_var(0.0, kInf);

  if (!drop_x_) {
    std::vector<int> x(d);
    for (std::size_t j = 0; j < d; ++j) x[j] = lp.add_var(-kInf, kInf);
    for (std::size_t i = 0; i < p; ++i) {
      std::vector<std::pair<int, double>> row;
      for (std::size_t j = 0; j < d; ++j)
        if (a_(i, j) != 0.0) row.emplace_back(x[j], a_(i, j));
      row.emplace_back(s[i], -1.0);
      lp.add_row(row, RowSense::Eq, 0.0);
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t i = 0; i < p; ++i)
      if (a_(i, j) != 0.0) row.emplace_back(s[i], a_(i, j));
    lp.add_row(row, RowSense::Le, 0.0);
  }
  {
    std::vector<std::pair<int, double>> row;
    for (std::size_t i = 0; i < p; ++i) {
      row.emplace_back(phi_pos[i], 1.0);
      row.emplace_back(phi_neg[i], 1.0);
    }
    lp.add_row(row, RowSense::Le, 1.0);
  }
  for (std::size_t i = 0; i < p; ++i) {
    std::vector<std::pair<int, double>> row;
    row.emplace_back(phi_pos[i], 1.0);
    row.emplace_back(phi_neg[i], -1.0);
    for (std::size_t k = 0; k < p; ++k)
      if (omega_(i, k) != 0.0) row.emplace_back(s[k], -omega_(i, k));
    lp.add_row(row, RowSense::Eq, 0.0);
  }
  if (cap) {
    const int u = lp.add_var(-kInf, 0.0, 1.0);
    std::vector<std::pair<int, double>> row;
    row.emplace_back(u, 1.0);
    for (std::size_t i = 0; i < p; ++i)
      if ((*cap)[i] != 0.0) row.emplace_back(s[i], -(*cap)[i]);
    lp.add_row(row, RowSense::Le, cap_offset);
  }

  const LPSolution sol = lp.solve();
  if (sol.status == LPStatus::Unbounded)
    throw std::runtime_error(
        "inequality program unbounded: omega_i kernel intersects the cone nontrivially");
  if (sol.status != LPStatus::Optimal)
    throw std::runtime_error("inequality program infeasible (internal error)");
  return sol.value;
}

double ConeProgram::value(const Vector& objective) const {
  // s = 0 is feasible, so the optimum is nonnegative up to roundoff.
  return std::max(0.0, run(objective, nullptr, 0.0));
}

double ConeProgram::value_capped(const Vector& objective, const Vector& cap,
                                 double cap_offset) const {
  return run(objective, &cap, cap_offset);
}

double t_stat_inequality(const HypothesisProblem& problem, const StarEstimate& star) {
  const double sqrt_n = std::sqrt(static_cast<double>(problem.n));
  Vector obj(star.fitted);
  for (double& v : obj) v *= sqrt_n;
  const ConeProgram prog(problem.a, problem.omega_or_identity(),
                         star.method == StarMethod::PinvLeastNorm);
  return prog.value(obj);
}

StatisticValue compute_statistic(const HypothesisProblem& problem, const StarEstimate& star) {
  StatisticValue v;
  v.t_e = t_stat_equality(problem, star);
  v.t_i = t_stat_inequality(problem, star);
  v.t_n = std::max(v.t_e, v.t_i);
  return v;
}

bool population_feasible(const DenseMatrix& a, const Vector& beta) {
  return feasible_cone_point(a, beta).has_value();
}

}  // namespace lsysinfer
