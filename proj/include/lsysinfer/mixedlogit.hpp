#ifndef LSYSINFER_MIXEDLOGIT_HPP
#define LSYSINFER_MIXEDLOGIT_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "lsysinfer/bootstrap.hpp"
#include "lsysinfer/hypothesis.hpp"
#include "lsysinfer/inference.hpp"

namespace lsysinfer {

using VType = std::pair<double, double>;  // (c0, c1)

// Random-coefficient binary logit laboratory: consumers of type v = (c0, c1)
// buy at price w with probability 1/(1 + exp(-c0 - c1 w)); the target is the
// c.d.f. of the price elasticity at w_bar evaluated at threshold t.
struct MixedLogitDesign {
  Vector w_support;               // p - 2 price points, uniform
  std::vector<VType> v_support;   // d types on a product grid
  Vector x_true;                  // type probabilities, sum to 1
  double t = -1.0;
  double w_bar = 1.0;
  long n = 0;

  std::size_t d() const { return v_support.size(); }
  std::size_t p() const { return w_support.size() + 2; }
};

struct ElasticityBounds {
  double lower = 0.0;
  double upper = 0.0;
  double t = 0.0;
  double w_bar = 0.0;

  double width() const { return upper - lower; }
};

double logit_choice_prob(double w, const VType& v);
double elasticity(const VType& v, double w_bar);

// Base-2 radical inverse of i (the 1-D Sobol sequence), i >= 1.
double radical_inverse_base2(std::uint64_t i);

// d must be a perfect square; each V margin takes the first sqrt(d) radical
// inverse points, c0 mapped into [0, 0.5], c1 into [-3, 0).
MixedLogitDesign build_design(std::size_t d, std::size_t w_points, double t, double w_bar, long n);

RawSample simulate_sample(const MixedLogitDesign& design, std::uint64_t seed);

// q(w) = sum_j x_true_j * l(w, v_j), one entry per support point.
Vector population_cond_probs(const MixedLogitDesign& design);

// 0/1 indicator a_j = 1{elasticity(v_j, w_bar) <= t}.
Vector elasticity_indicator(const MixedLogitDesign& design);

// min / max of a'x over {x >= 0 : sum x = 1, moment rows = cond_probs}.
ElasticityBounds identified_bounds(const MixedLogitDesign& design, const Vector& cond_probs);

// beta = (cell means, 1, gamma); A = [l(w_i, v_j); ones; a_j]; last two rows
// known; xi_hat = diag(p(1-p)/q) from empirical cell frequencies.
HypothesisProblem build_problem(const MixedLogitDesign& design, const RawSample& sample,
                                double gamma);

// Multinomial row resampler; degenerate (empty cell) resamples yield nullopt.
class MixedLogitResampler : public BetaResampler {
 public:
  MixedLogitResampler(const MixedLogitDesign& design, RawSample sample, double gamma);
  std::optional<Vector> resample(Rng& rng) const override;

 private:
  std::size_t cells_;
  RawSample sample_;
  double gamma_;
};

struct GammaRule {
  enum class Kind { LowerBound, UpperBound, Fixed, Sweep } kind = Kind::LowerBound;
  double value = 0.0;        // Fixed
  GridSpec grid;             // Sweep

  static GammaRule lower_bound() { return {Kind::LowerBound, 0.0, {}}; }
  static GammaRule upper_bound() { return {Kind::UpperBound, 0.0, {}}; }
  static GammaRule fixed(double gamma) { return {Kind::Fixed, gamma, {}}; }
  static GammaRule sweep(const GridSpec& grid) { return {Kind::Sweep, 0.0, grid}; }
};

struct MonteCarloRow {
  double gamma = 0.0;
  std::size_t replications = 0;
  double reject_rate = 0.0;
  double mc_se = 0.0;
};

struct MonteCarloResult {
  ElasticityBounds bounds;  // at population probabilities
  std::vector<MonteCarloRow> rows;
};

// R independent replications of simulate -> build -> test at each gamma.
// Replicates share substreams across gamma values (common random numbers).
MonteCarloResult monte_carlo(const MixedLogitDesign& design, const GammaRule& rule, std::size_t r,
                             std::size_t b_draws, double alpha, const LambdaMode& lambda_mode,
                             std::uint64_t seed, int threads = 0);

}  // namespace lsysinfer

#endif
