#ifndef LSYSINFER_STATISTIC_HPP
#define LSYSINFER_STATISTIC_HPP

#include "lsysinfer/hypothesis.hpp"
#include "lsysinfer/lp.hpp"
#include "lsysinfer/matrix.hpp"

namespace lsysinfer {

enum class StarMethod { PinvLeastNorm, ConstrainedGLS };

struct StarEstimate {
  Vector x_star;
  Vector fitted;  // A x_star
  StarMethod method = StarMethod::PinvLeastNorm;
};

// Reusable estimator of x*: min-norm least squares when A is full rank with
// d >= p, otherwise GLS on the unknown block subject to the known rows.
// Factorizations are computed once so bootstrap replicates are cheap.
class StarSolver {
 public:
  explicit StarSolver(const HypothesisProblem& problem);
  StarEstimate estimate(const Vector& beta_hat) const;
  StarMethod method() const { return method_; }

 private:
  DenseMatrix a_;
  StarMethod method_;
  std::vector<std::size_t> unknown_, known_;
  SvdResult a_svd_;            // PinvLeastNorm
  DenseMatrix au_t_xi_pinv_;   // ConstrainedGLS: A_u' Xi^+
  SvdResult kkt_svd_;          // ConstrainedGLS: KKT block matrix
  Vector beta_known_;
};

StarEstimate estimate_x_star(const HypothesisProblem& problem);

// (Xi^{1/2})^+ restricted to range(Xi); the dual-norm transform behind the
// equality statistic.
DenseMatrix xi_half_pinv(const DenseMatrix& xi);

double t_stat_equality(const HypothesisProblem& problem, const StarEstimate& star);
double t_stat_inequality(const HypothesisProblem& problem, const StarEstimate& star);

struct StatisticValue {
  double t_e = 0.0;
  double t_i = 0.0;
  double t_n = 0.0;
};

StatisticValue compute_statistic(const HypothesisProblem& problem, const StarEstimate& star);

// sup <s, objective> over {s = Ax, A's <= 0, ||omega s||_1 <= 1}, the shared
// engine behind the inequality statistic, its bootstrap analogue, and the
// data-driven lambda. When A is full rank with d >= p the s = Ax block is
// dropped.
class ConeProgram {
 public:
  ConeProgram(const DenseMatrix& a, const DenseMatrix& omega, bool drop_x);
  double value(const Vector& objective) const;
  // Adds the auxiliary scalar u <= min{<cap, s> + cap_offset, 0} to the
  // objective (the linearized two-stage upper bound).
  double value_capped(const Vector& objective, const Vector& cap, double cap_offset) const;

 private:
  double run(const Vector& objective, const Vector* cap, double cap_offset) const;
  DenseMatrix a_;
  DenseMatrix omega_;
  bool drop_x_;
};

bool population_feasible(const DenseMatrix& a, const Vector& beta);

}  // namespace lsysinfer

#endif
