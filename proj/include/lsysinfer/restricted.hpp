#ifndef LSYSINFER_RESTRICTED_HPP
#define LSYSINFER_RESTRICTED_HPP

#include "lsysinfer/hypothesis.hpp"
#include "lsysinfer/statistic.hpp"

namespace lsysinfer {

struct RestrictedEstimate {
  Vector beta_r;      // restricted estimate of beta, satisfies the null
  Vector witness_x;   // x >= 0 with A witness_x = beta_r
  double outer_value; // attained min-max objective
};

// Collapses the min-max defining the restricted estimator into a single LP
// via the dual of the inner program.
RestrictedEstimate restricted_estimator(const HypothesisProblem& problem,
                                        const StarEstimate& star);

// Coefficient vector lambda * sqrt(n) * (A witness_x); downstream bootstrap
// LPs add <s, .> of this as the upper-bound objective term.
Vector upper_bound_term(double lambda_n, const RestrictedEstimate& restricted,
                        const HypothesisProblem& problem);

}  // namespace lsysinfer

#endif
