#ifndef LSYSINFER_BOOTSTRAP_HPP
#define LSYSINFER_BOOTSTRAP_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lsysinfer/hypothesis.hpp"
#include "lsysinfer/restricted.hpp"
#include "lsysinfer/rng.hpp"
#include "lsysinfer/statistic.hpp"

namespace lsysinfer {

struct BootstrapDraw {
  Vector g_e;  // sqrt(n){(beta_b - A x*_b) - (beta_hat - A x*)}
  Vector g_i;  // sqrt(n) A(x*_b - x*)
  std::size_t replicate_index = 0;
};

struct BootstrapSet {
  std::vector<BootstrapDraw> draws;
  long redraws = 0;  // degenerate resamples that were retried
};

// Produces one bootstrap replicate of beta_hat, known block held fixed.
// Returns nullopt when the resample is degenerate (e.g. an empty cell);
// the engine then retries with a fresh substream.
class BetaResampler {
 public:
  virtual ~BetaResampler() = default;
  virtual std::optional<Vector> resample(Rng& rng) const = 0;
};

// Fallback when only (beta_hat, xi_hat) are available: perturbs the unknown
// block by Xi^{1/2} z / sqrt(n) with z standard normal.
class GaussianResampler : public BetaResampler {
 public:
  explicit GaussianResampler(const HypothesisProblem& problem);
  std::optional<Vector> resample(Rng& rng) const override;

 private:
  Vector beta_hat_;
  std::vector<std::size_t> unknown_;
  DenseMatrix xi_half_;
  double inv_sqrt_n_;
};

// Each replicate owns RNG substream (seed, b, attempt); output is identical
// for any thread count.
BootstrapSet draw_bootstrap(const HypothesisProblem& problem, const BetaResampler& resampler,
                            const StarSolver& star_solver, const StarEstimate& star,
                            std::size_t b_draws, std::uint64_t seed, int threads = 0);

// psd_sqrt of the sample covariance (1/B, mean-centered) of the g_i draws.
DenseMatrix omega_i_from_bootstrap(const std::vector<BootstrapDraw>& draws, std::size_t p);

enum class CriticalValueMethod { OneStep, TwoStage };

struct CriticalValueReport {
  double c_value = 0.0;
  double alpha = 0.0;
  double lambda_used = 0.0;
  std::size_t draws = 0;
  Vector bootstrap_stats;  // ordered by replicate_index
  CriticalValueMethod method = CriticalValueMethod::OneStep;
  double gamma = 0.0;  // TwoStage only
};

// ceil(B * q)-th smallest order statistic, q in (0,1).
double empirical_quantile(Vector values, double q);

CriticalValueReport critical_value(const HypothesisProblem& problem, const StarEstimate& star,
                                   const RestrictedEstimate& restricted,
                                   const std::vector<BootstrapDraw>& draws, double lambda_n,
                                   double alpha, int threads = 0);

double lambda_rule_of_thumb(std::size_t p, long n);

double delta_n_rule(long n);

double lambda_bootstrap(const HypothesisProblem& problem, const StarEstimate& star,
                        const std::vector<BootstrapDraw>& draws, long n, int threads = 0);

CriticalValueReport two_stage_critical_value(const HypothesisProblem& problem,
                                             const StarEstimate& star,
                                             const std::vector<BootstrapDraw>& draws, double alpha,
                                             double gamma, int threads = 0);

}  // namespace lsysinfer

#endif
