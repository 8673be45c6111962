#ifndef LSYSINFER_INFERENCE_HPP
#define LSYSINFER_INFERENCE_HPP

#include <functional>
#include <memory>
#include <string>

#include "lsysinfer/bootstrap.hpp"
#include "lsysinfer/hypothesis.hpp"
#include "lsysinfer/statistic.hpp"

namespace lsysinfer {

struct LambdaMode {
  enum class Kind { RuleOfThumb, BootstrapRule, Fixed, TwoStage } kind = Kind::RuleOfThumb;
  double value = 0.0;  // Fixed: lambda; TwoStage: gamma

  static LambdaMode rule_of_thumb() { return {Kind::RuleOfThumb, 0.0}; }
  static LambdaMode bootstrap_rule() { return {Kind::BootstrapRule, 0.0}; }
  static LambdaMode fixed(double lambda) { return {Kind::Fixed, lambda}; }
  static LambdaMode two_stage(double gamma) { return {Kind::TwoStage, gamma}; }
};

struct TestReport {
  StatisticValue statistic;
  CriticalValueReport critical;
  bool reject = false;
  double p_value = 1.0;
  std::uint64_t seed = 0;
  double timing_ms = 0.0;
  long bootstrap_redraws = 0;
};

// Full pipeline: x* estimate, bootstrap pre-pass for omega_i, statistic,
// restricted estimator, lambda selection, critical value, decision. Errors
// from any stage are rethrown with a stage label.
TestReport run_test(const HypothesisProblem& problem, const BetaResampler& resampler, double alpha,
                    const LambdaMode& lambda_mode, std::size_t b_draws, std::uint64_t seed,
                    int threads = 0);

struct GridPoint {
  double gamma = 0.0;
  bool reject = false;
  double t_n = 0.0;
  double c_value = 0.0;
};

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.0;
  std::vector<GridPoint> grid;
  std::vector<std::string> diagnostics;
};

struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t points = 21;
};

using ProblemFamily = std::function<HypothesisProblem(double)>;
using ResamplerFactory =
    std::function<std::unique_ptr<BetaResampler>(const HypothesisProblem&)>;

// Test inversion over gamma with common random numbers; coarse grid then
// bisection of each boundary to resolution grid_step / 2^8.
ConfidenceInterval invert_ci(const ProblemFamily& family, const ResamplerFactory& make_resampler,
                             double alpha, const LambdaMode& lambda_mode, const GridSpec& search,
                             std::size_t b_draws, std::uint64_t seed, int threads = 0);

}  // namespace lsysinfer

#endif
