#ifndef LSYSINFER_HYPOTHESIS_HPP
#define LSYSINFER_HYPOTHESIS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsysinfer/matrix.hpp"

namespace lsysinfer {

// The problem data: beta = Ax for some x >= 0, with a block of beta held at
// known constants. xi_hat is the asymptotic variance of the unknown block;
// omega_i weights the inequality statistic (usually filled by a bootstrap
// pre-pass, identity when absent).
struct HypothesisProblem {
  DenseMatrix a;
  Vector beta_hat;
  std::vector<std::uint8_t> known_mask;
  long n = 0;
  std::optional<DenseMatrix> xi_hat;
  std::optional<DenseMatrix> omega_i;

  std::size_t p() const { return a.rows(); }
  std::size_t d() const { return a.cols(); }
  std::size_t p_unknown() const;
  std::vector<std::size_t> unknown_indices() const;
  std::vector<std::size_t> known_indices() const;
  DenseMatrix a_unknown() const;
  DenseMatrix a_known() const;
  Vector beta_unknown() const;
  Vector beta_known() const;
  DenseMatrix xi_or_identity() const;
  DenseMatrix omega_or_identity() const;

  void validate_shapes() const;  // throws on inconsistent fields
};

// Raw microdata rows (y, w-cell index) for the bootstrap; w_levels carries
// the distinct covariate values so CSV input can be mapped onto cells.
struct RawSample {
  std::vector<std::uint8_t> y;
  std::vector<int> w_index;
  Vector w_levels;

  std::size_t size() const { return y.size(); }
};

// Appends the hypothesized counterfactual value gamma as a known row a_row'x = gamma.
HypothesisProblem augment_with_counterfactual(const HypothesisProblem& base, const Vector& a_row,
                                              double gamma);

// Conditional-moment-inequality construction: A = [M, -M, -I_p], beta = G.
HypothesisProblem build_conditional_moment_problem(const Vector& g_bar, const DenseMatrix& m_bar,
                                                   long n);

struct Diagnostic {
  std::string code;
  std::string message;
};

std::vector<Diagnostic> validate(const HypothesisProblem& problem);

HypothesisProblem problem_from_json_text(const std::string& text);
std::string problem_to_json_text(const HypothesisProblem& problem);

}  // namespace lsysinfer

#endif
