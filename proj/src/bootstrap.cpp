#include "lsysinfer/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "lsysinfer/parallel.hpp"

namespace lsysinfer {

GaussianResampler::GaussianResampler(const HypothesisProblem& problem)
    : beta_hat_(problem.beta_hat),
      unknown_(problem.unknown_indices()),
      xi_half_(psd_sqrt(problem.xi_or_identity())),
      inv_sqrt_n_(1.0 / std::sqrt(static_cast<double>(problem.n))) {}

std::optional<Vector> GaussianResampler::resample(Rng& rng) const {
  Vector z(unknown_.size());
  for (double& v : z) v = rng.normal();
  const Vector shift = xi_half_.apply(z);
  Vector beta = beta_hat_;
  for (std::size_t k = 0; k < unknown_.size(); ++k)
    beta[unknown_[k]] += inv_sqrt_n_ * shift[k];
  return beta;
}

BootstrapSet draw_bootstrap(const HypothesisProblem& problem, const BetaResampler& resampler,
                            const StarSolver& star_solver, const StarEstimate& star,
                            std::size_t b_draws, std::uint64_t seed, int threads) {
  const std::size_t p = problem.p();
  const double sqrt_n = std::sqrt(static_cast<double>(problem.n));
  Vector base_resid(p);
  for (std::size_t i = 0; i < p; ++i) base_resid[i] = problem.beta_hat[i] - star.fitted[i];

  BootstrapSet out;
  out.draws.resize(b_draws);
  std::atomic<long> redraws{0};
  parallel_for(b_draws, threads, [&](std::size_t b) {
    std::optional<Vector> beta_b;
    std::uint64_t attempt = 0;
    for (; attempt < 100; ++attempt) {
      Rng rng(Rng::substream(seed, b, attempt));
      beta_b = resampler.resample(rng);
      if (beta_b) break;
    }
    if (!beta_b) {
      std::ostringstream os;
      os << "bootstrap replicate " << b << ": 100 consecutive degenerate resamples";
      throw std::runtime_error(os.str());
    }
    redraws.fetch_add(static_cast<long>(attempt), std::memory_order_relaxed);

    const StarEstimate star_b = star_solver.estimate(*beta_b);
    BootstrapDraw& d = out.draws[b];
    d.replicate_index = b;
    d.g_e.resize(p);
    d.g_i.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
      d.g_e[i] = sqrt_n * (((*beta_b)[i] - star_b.fitted[i]) - base_resid[i]);
      d.g_i[i] = sqrt_n * (star_b.fitted[i] - star.fitted[i]);
    }
  });
  out.redraws = redraws.load();
  return out;
}

DenseMatrix omega_i_from_bootstrap(const std::vector<BootstrapDraw>& draws, std::size_t p) {
  if (draws.size() < 2) throw std::invalid_argument("omega_i_from_bootstrap: need >= 2 draws");
  const double inv_b = 1.0 / static_cast<double>(draws.size());
  Vector mean(p, 0.0);
  for (const auto& d : draws)
    for (std::size_t i = 0; i < p; ++i) mean[i] += inv_b * d.g_i[i];
  DenseMatrix cov(p, p);
  for (const auto& d : draws)
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        cov(i, j) += inv_b * (d.g_i[i] - mean[i]) * (d.g_i[j] - mean[j]);
  DenseMatrix root = psd_sqrt(cov);
  // Roundoff dirt far below the matrix scale destabilizes the downstream
  // simplex ratio tests; snap it to exact zeros.
  const double floor = 1e-10 * root.max_abs();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (std::fabs(root(i, j)) < floor) root(i, j) = 0.0;
  return root;
}

double empirical_quantile(Vector values, double q) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double raw = std::ceil(static_cast<double>(values.size()) * q);
  std::size_t k = raw < 1.0 ? 1 : static_cast<std::size_t>(raw);
  if (k > values.size()) k = values.size();
  return values[k - 1];
}

namespace {

// Equality part of a bootstrap statistic: same closed form as
// t_stat_equality but with G^e already on the sqrt(n) scale.
struct EqualityPart {
  bool active;
  std::vector<std::size_t> unknown;
  DenseMatrix w;

  EqualityPart(const HypothesisProblem& problem, const StarEstimate& star)
      : active(star.method == StarMethod::ConstrainedGLS),
        unknown(problem.unknown_indices()) {
    if (active) w = xi_half_pinv(problem.xi_or_identity());
  }

  double operator()(const Vector& g_e) const {
    if (!active) return 0.0;
    Vector g_u(unknown.size());
    for (std::size_t k = 0; k < unknown.size(); ++k) g_u[k] = g_e[unknown[k]];
    return inf_norm(w.apply(g_u));
  }
};

Vector map_draws(const std::vector<BootstrapDraw>& draws, int threads,
                 const std::function<double(const BootstrapDraw&)>& fn) {
  Vector stats(draws.size());
  parallel_for(draws.size(), threads, [&](std::size_t b) {
    try {
      stats[b] = fn(draws[b]);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "bootstrap replicate " << draws[b].replicate_index << ": " << e.what();
      throw std::runtime_error(os.str());
    }
  });
  return stats;
}

}  // namespace

CriticalValueReport critical_value(const HypothesisProblem& problem, const StarEstimate& star,
                                   const RestrictedEstimate& restricted,
                                   const std::vector<BootstrapDraw>& draws, double lambda_n,
                                   double alpha, int threads) {
  if (draws.empty()) throw std::invalid_argument("critical_value: no bootstrap draws");
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("critical_value: alpha not in (0, 0.5)");

  const EqualityPart eq(problem, star);
  const ConeProgram cone(problem.a, problem.omega_or_identity(),
                         star.method == StarMethod::PinvLeastNorm);
  const Vector upper = upper_bound_term(lambda_n, restricted, problem);

  CriticalValueReport rep;
  rep.alpha = alpha;
  rep.lambda_used = lambda_n;
  rep.draws = draws.size();
  rep.method = CriticalValueMethod::OneStep;
  rep.bootstrap_stats = map_draws(draws, threads, [&](const BootstrapDraw& d) {
    Vector obj(d.g_i);
    for (std::size_t i = 0; i < obj.size(); ++i) obj[i] += upper[i];
    return std::max(eq(d.g_e), cone.value(obj));
  });
  rep.c_value = empirical_quantile(rep.bootstrap_stats, 1.0 - alpha);
  return rep;
}

double lambda_rule_of_thumb(std::size_t p, long n) {
  const double lp = std::max(1.0, std::log(std::max<double>(1, p)));
  const double lln = std::max(1.0, std::log(std::max(1.0, std::log(static_cast<double>(std::max<long>(1, n))))));
  const double v = 1.0 / std::sqrt(lp * lln);
  return std::clamp(v, 0.0, 1.0);
}

double delta_n_rule(long n) {
  const double lln = std::max(1.0, std::log(std::max(1.0, std::log(static_cast<double>(std::max<long>(1, n))))));
  return 1.0 / std::sqrt(lln);
}

double lambda_bootstrap(const HypothesisProblem& problem, const StarEstimate& star,
                        const std::vector<BootstrapDraw>& draws, long n, int threads) {
  if (draws.empty()) throw std::invalid_argument("lambda_bootstrap: no bootstrap draws");
  const ConeProgram cone(problem.a, problem.omega_or_identity(),
                         star.method == StarMethod::PinvLeastNorm);
  const Vector values = map_draws(draws, threads,
                                  [&](const BootstrapDraw& d) { return cone.value(d.g_i); });
  const double tau = empirical_quantile(values, 1.0 - delta_n_rule(n));
  return std::min(1.0, tau);
}

CriticalValueReport two_stage_critical_value(const HypothesisProblem& problem,
                                             const StarEstimate& star,
                                             const std::vector<BootstrapDraw>& draws, double alpha,
                                             double gamma, int threads) {
  if (draws.empty()) throw std::invalid_argument("two_stage_critical_value: no bootstrap draws");
  if (!(gamma > 0.0 && gamma < alpha && alpha < 0.5))
    throw std::invalid_argument("two_stage_critical_value: need 0 < gamma < alpha < 0.5");

  const EqualityPart eq(problem, star);
  const ConeProgram cone(problem.a, problem.omega_or_identity(),
                         star.method == StarMethod::PinvLeastNorm);

  // Stage 1: (1 - gamma)-quantile of sup <s, -G^i>.
  const Vector stage1 = map_draws(draws, threads, [&](const BootstrapDraw& d) {
    Vector neg(d.g_i);
    for (double& v : neg) v = -v;
    return cone.value(neg);
  });
  const double c1 = empirical_quantile(stage1, 1.0 - gamma);

  // Stage 2: auxiliary u <= min{sqrt(n)<s, A x*> + c1, 0} added to the objective.
  const double sqrt_n = std::sqrt(static_cast<double>(problem.n));
  Vector cap(star.fitted);
  for (double& v : cap) v *= sqrt_n;

  CriticalValueReport rep;
  rep.alpha = alpha;
  rep.gamma = gamma;
  rep.draws = draws.size();
  rep.method = CriticalValueMethod::TwoStage;
  rep.bootstrap_stats = map_draws(draws, threads, [&](const BootstrapDraw& d) {
    return std::max(eq(d.g_e), cone.value_capped(d.g_i, cap, c1));
  });
  rep.c_value = empirical_quantile(rep.bootstrap_stats, 1.0 - alpha + gamma);
  return rep;
}

}  // namespace lsysinfer
