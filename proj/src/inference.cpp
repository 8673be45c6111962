#include "lsysinfer/inference.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lsysinfer {

namespace {

[[noreturn]] void rethrow_with_stage(const char* stage, const std::exception& e) {
  throw std::runtime_error(std::string(stage) + ": " + e.what());
}

}  // namespace

TestReport run_test(const HypothesisProblem& input, const BetaResampler& resampler, double alpha,
                    const LambdaMode& lambda_mode, std::size_t b_draws, std::uint64_t seed,
                    int threads) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("run_test: alpha not in (0, 0.5)");
  if (b_draws == 0) throw std::invalid_argument("run_test: need at least one bootstrap draw");
  const auto t0 = std::chrono::steady_clock::now();

  TestReport rep;
  rep.seed = seed;

  HypothesisProblem problem = input;
  problem.validate_shapes();

  StarEstimate star;
  std::unique_ptr<StarSolver> solver;
  try {
    solver = std::make_unique<StarSolver>(problem);
    star = solver->estimate(problem.beta_hat);
  } catch (const std::exception& e) {
    rethrow_with_stage("x_star", e);
  }

  BootstrapSet boot;
  try {
    boot = draw_bootstrap(problem, resampler, *solver, star, b_draws, seed, threads);
    rep.bootstrap_redraws = boot.redraws;
    if (!problem.omega_i && b_draws >= 2)
      problem.omega_i = omega_i_from_bootstrap(boot.draws, problem.p());
  } catch (const std::exception& e) {
    rethrow_with_stage("bootstrap", e);
  }

  try {
    rep.statistic = compute_statistic(problem, star);
  } catch (const std::exception& e) {
    rethrow_with_stage("statistic", e);
  }

  RestrictedEstimate restricted;
  try {
    restricted = restricted_estimator(problem, star);
  } catch (const std::exception& e) {
    rethrow_with_stage("restricted_estimator", e);
  }

  double lambda_n = 0.0;
  try {
    switch (lambda_mode.kind) {
      case LambdaMode::Kind::RuleOfThumb:
        lambda_n = lambda_rule_of_thumb(problem.p(), problem.n);
        break;
      case LambdaMode::Kind::BootstrapRule:
        lambda_n = lambda_bootstrap(problem, star, boot.draws, problem.n, threads);
        break;
      case LambdaMode::Kind::Fixed:
        if (!(lambda_mode.value >= 0.0 && lambda_mode.value <= 1.0))
          throw std::invalid_argument("fixed lambda outside [0,1]");
        lambda_n = lambda_mode.value;
        break;
      case LambdaMode::Kind::TwoStage:
        break;
    }
  } catch (const std::exception& e) {
    rethrow_with_stage("lambda", e);
  }

  try {
    if (lambda_mode.kind == LambdaMode::Kind::TwoStage)
      rep.critical = two_stage_critical_value(problem, star, boot.draws, alpha, lambda_mode.value,
                                              threads);
    else
      rep.critical = critical_value(problem, star, restricted, boot.draws, lambda_n, alpha, threads);
  } catch (const std::exception& e) {
    rethrow_with_stage("critical_value", e);
  }

  rep.reject = rep.statistic.t_n > rep.critical.c_value;
  std::size_t ge = 0;
  for (double s : rep.critical.bootstrap_stats)
    if (s >= rep.statistic.t_n) ++ge;
  rep.p_value = static_cast<double>(1 + ge) / static_cast<double>(b_draws + 1);

  rep.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
  return rep;
}

ConfidenceInterval invert_ci(const ProblemFamily& family, const ResamplerFactory& make_resampler,
                             double alpha, const LambdaMode& lambda_mode, const GridSpec& search,
                             std::size_t b_draws, std::uint64_t seed, int threads) {
  if (search.points < 2) throw std::invalid_argument("invert_ci: grid needs >= 2 points");
  if (!(search.hi > search.lo)) throw std::invalid_argument("invert_ci: empty grid range");

  ConfidenceInterval ci;
  ci.alpha = alpha;
  const double step = (search.hi - search.lo) / static_cast<double>(search.points - 1);

  // Same master seed at every gamma: common random numbers keep the
  // rejection region monotone in practice.
  auto evaluate = [&](double gamma) {
    const HypothesisProblem problem = family(gamma);
    const auto resampler = make_resampler(problem);
    const TestReport rep = run_test(problem, *resampler, alpha, lambda_mode, b_draws, seed, threads);
    GridPoint pt;
    pt.gamma = gamma;
    pt.reject = rep.reject;
    pt.t_n = rep.statistic.t_n;
    pt.c_value = rep.critical.c_value;
    return pt;
  };

  for (std::size_t i = 0; i < search.points; ++i)
    ci.grid.push_back(evaluate(search.lo + step * static_cast<double>(i)));

  long first_ok = -1, last_ok = -1;
  for (std::size_t i = 0; i < ci.grid.size(); ++i)
    if (!ci.grid[i].reject) {
      if (first_ok < 0) first_ok = static_cast<long>(i);
      last_ok = static_cast<long>(i);
    }
  if (first_ok < 0)
    throw std::runtime_error("empty confidence set at this alpha and grid");

  for (long i = first_ok; i <= last_ok; ++i)
    if (ci.grid[static_cast<std::size_t>(i)].reject) {
      std::ostringstream os;
      os << "non-contiguous non-rejection region: interior grid point "
         << ci.grid[static_cast<std::size_t>(i)].gamma << " rejected; reporting the hull";
      ci.diagnostics.push_back(os.str());
    }

  // Bisect a boundary lying between a rejected and a non-rejected point.
  auto bisect = [&](double rejected, double accepted) {
    for (int it = 0; it < 8; ++it) {
      const double mid = 0.5 * (rejected + accepted);
      const GridPoint pt = evaluate(mid);
      ci.grid.push_back(pt);
      (pt.reject ? rejected : accepted) = mid;
    }
    return accepted;
  };

  ci.lower = ci.grid[static_cast<std::size_t>(first_ok)].gamma;
  ci.upper = ci.grid[static_cast<std::size_t>(last_ok)].gamma;
  if (first_ok > 0)
    ci.lower = bisect(ci.grid[static_cast<std::size_t>(first_ok - 1)].gamma, ci.lower);
  if (last_ok + 1 < static_cast<long>(search.points))
    ci.upper = bisect(ci.grid[static_cast<std::size_t>(last_ok + 1)].gamma, ci.upper);
  return ci;
}

}  // namespace lsysinfer
