#include "lsysinfer/mixedlogit.hpp"

#include <cmath>
#include <stdexcept>

#include "lsysinfer/lp.hpp"
#include "lsysinfer/parallel.hpp"

namespace lsysinfer {

double logit_choice_prob(double w, const VType& v) {
  const double z = v.first + v.second * w;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double elasticity(const VType& v, double w_bar) {
  return v.second * w_bar * (1.0 - logit_choice_prob(w_bar, v));
}

double radical_inverse_base2(std::uint64_t i) {
  double result = 0.0, f = 0.5;
  while (i) {
    if (i & 1u) result += f;
    f *= 0.5;
    i >>= 1;
  }
  return result;
}

MixedLogitDesign build_design(std::size_t d, std::size_t w_points, double t, double w_bar, long n) {
  const auto root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
  if (root * root != d) throw std::invalid_argument("build_design: d is not a perfect square");
  if (w_points != 4 && w_points != 16) throw std::invalid_argument("build_design: w_points must be 4 or 16");

  MixedLogitDesign design;
  design.t = t;
  design.w_bar = w_bar;
  design.n = n;

  design.w_support.resize(w_points);
  const double w_step = 3.0 / static_cast<double>(w_points - 1);
  for (std::size_t i = 0; i < w_points; ++i)
    design.w_support[i] = w_step * static_cast<double>(i);

  Vector c0(root), c1(root);
  for (std::size_t i = 0; i < root; ++i) {
    const double u = radical_inverse_base2(i + 1);  // skip the initial 0 point
    c0[i] = 0.5 * u;                                // [0, 0.5]
    c1[i] = -3.0 + 3.0 * u;                         // [-3, 0)
  }
  design.v_support.reserve(d);
  for (std::size_t a = 0; a < root; ++a)
    for (std::size_t b = 0; b < root; ++b) design.v_support.emplace_back(c0[a], c1[b]);
  design.x_true.assign(d, 1.0 / static_cast<double>(d));
  return design;
}

RawSample simulate_sample(const MixedLogitDesign& design, std::uint64_t seed) {
  Rng rng(seed);
  RawSample sample;
  sample.w_levels = design.w_support;
  sample.y.resize(static_cast<std::size_t>(design.n));
  sample.w_index.resize(static_cast<std::size_t>(design.n));
  for (long i = 0; i < design.n; ++i) {
    const auto w = static_cast<int>(rng.bounded(design.w_support.size()));
    const std::size_t v = static_cast<std::size_t>(rng.bounded(design.d()));
    const double l = logit_choice_prob(design.w_support[static_cast<std::size_t>(w)],
                                       design.v_support[v]);
    sample.w_index[static_cast<std::size_t>(i)] = w;
    sample.y[static_cast<std::size_t>(i)] = rng.uniform01() < l ? 1 : 0;
  }
  return sample;
}

Vector population_cond_probs(const MixedLogitDesign& design) {
  Vector q(design.w_support.size(), 0.0);
  for (std::size_t i = 0; i < design.w_support.size(); ++i)
    for (std::size_t j = 0; j < design.d(); ++j)
      q[i] += design.x_true[j] * logit_choice_prob(design.w_support[i], design.v_support[j]);
  return q;
}

Vector elasticity_indicator(const MixedLogitDesign& design) {
  Vector a(design.d());
  for (std::size_t j = 0; j < design.d(); ++j)
    a[j] = elasticity(design.v_support[j], design.w_bar) <= design.t ? 1.0 : 0.0;
  return a;
}

namespace {

double bounds_lp(const MixedLogitDesign& design, const Vector& cond_probs, const Vector& a,
                 bool maximize) {
  LPBuilder lp;
  lp.set_maximize(maximize);
  std::vector<int> x(design.d());
  for (std::size_t j = 0; j < design.d(); ++j) x[j] = lp.add_var(0.0, kInf, a[j]);
  {
    std::vector<std::pair<int, double>> row;
    for (std::size_t j = 0; j < design.d(); ++j) row.emplace_back(x[j], 1.0);
    lp.add_row(row, RowSense::Eq, 1.0);
  }
  for (std::size_t i = 0; i < design.w_support.size(); ++i) {
    std::vector<std::pair<int, double>> row;
    for (std::size_t j = 0; j < design.d(); ++j)
      row.emplace_back(x[j], logit_choice_prob(design.w_support[i], design.v_support[j]));
    lp.add_row(row, RowSense::Eq, cond_probs[i]);
  }
  const LPSolution sol = lp.solve();
  if (sol.status != LPStatus::Optimal)
    throw std::runtime_error("identified_bounds: moment system infeasible for this V grid");
  return sol.value;
}

}  // namespace

ElasticityBounds identified_bounds(const MixedLogitDesign& design, const Vector& cond_probs) {
  if (cond_probs.size() != design.w_support.size())
    throw std::invalid_argument("identified_bounds: cond_probs length != |w_support|");
  const Vector a = elasticity_indicator(design);
  ElasticityBounds b;
  b.t = design.t;
  b.w_bar = design.w_bar;
  b.lower = bounds_lp(design, cond_probs, a, false);
  b.upper = bounds_lp(design, cond_probs, a, true);
  return b;
}

namespace {

// Cell means and frequencies of P(Y=1 | W=w); false when a cell is empty.
bool cell_means(const RawSample& sample, std::size_t cells, Vector& p_hat, Vector& q_hat) {
  std::vector<long> count(cells, 0), ones(cells, 0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto w = static_cast<std::size_t>(sample.w_index[i]);
    ++count[w];
    ones[w] += sample.y[i];
  }
  p_hat.assign(cells, 0.0);
  q_hat.assign(cells, 0.0);
  for (std::size_t w = 0; w < cells; ++w) {
    if (count[w] == 0) return false;
    p_hat[w] = static_cast<double>(ones[w]) / static_cast<double>(count[w]);
    q_hat[w] = static_cast<double>(count[w]) / static_cast<double>(sample.size());
  }
  return true;
}

Vector beta_from_cells(const Vector& p_hat, double gamma) {
  Vector beta = p_hat;
  beta.push_back(1.0);
  beta.push_back(gamma);
  return beta;
}

}  // namespace

HypothesisProblem build_problem(const MixedLogitDesign& design, const RawSample& sample,
                                double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("build_problem: gamma outside [0,1]");
  const std::size_t cells = design.w_support.size(), d = design.d();
  Vector p_hat, q_hat;
  if (!cell_means(sample, cells, p_hat, q_hat))
    throw std::runtime_error("build_problem: empty W cell in sample");

  HypothesisProblem problem;
  problem.a = DenseMatrix(cells + 2, d);
  for (std::size_t i = 0; i < cells; ++i)
    for (std::size_t j = 0; j < d; ++j)
      problem.a(i, j) = logit_choice_prob(design.w_support[i], design.v_support[j]);
  for (std::size_t j = 0; j < d; ++j) problem.a(cells, j) = 1.0;
  const Vector ind = elasticity_indicator(design);
  for (std::size_t j = 0; j < d; ++j) problem.a(cells + 1, j) = ind[j];

  problem.beta_hat = beta_from_cells(p_hat, gamma);
  problem.known_mask.assign(cells, 0);
  problem.known_mask.push_back(1);
  problem.known_mask.push_back(1);
  problem.n = static_cast<long>(sample.size());

  DenseMatrix xi(cells, cells);
  for (std::size_t w = 0; w < cells; ++w) xi(w, w) = p_hat[w] * (1.0 - p_hat[w]) / q_hat[w];
  problem.xi_hat = xi;
  return problem;
}

MixedLogitResampler::MixedLogitResampler(const MixedLogitDesign& design, RawSample sample,
                                         double gamma)
    : cells_(design.w_support.size()), sample_(std::move(sample)), gamma_(gamma) {}

std::optional<Vector> MixedLogitResampler::resample(Rng& rng) const {
  const std::size_t n = sample_.size();
  std::vector<long> count(cells_, 0), ones(cells_, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(rng.bounded(n));
    const auto w = static_cast<std::size_t>(sample_.w_index[k]);
    ++count[w];
    ones[w] += sample_.y[k];
  }
  Vector p_hat(cells_);
  for (std::size_t w = 0; w < cells_; ++w) {
    if (count[w] == 0) return std::nullopt;
    p_hat[w] = static_cast<double>(ones[w]) / static_cast<double>(count[w]);
  }
  return beta_from_cells(p_hat, gamma_);
}

MonteCarloResult monte_carlo(const MixedLogitDesign& design, const GammaRule& rule, std::size_t r,
                             std::size_t b_draws, double alpha, const LambdaMode& lambda_mode,
                             std::uint64_t seed, int threads) {
  if (r == 0) throw std::invalid_argument("monte_carlo: need at least one replication");

  MonteCarloResult result;
  result.bounds = identified_bounds(design, population_cond_probs(design));

  Vector gammas;
  switch (rule.kind) {
    case GammaRule::Kind::LowerBound: gammas.push_back(result.bounds.lower); break;
    case GammaRule::Kind::UpperBound: gammas.push_back(result.bounds.upper); break;
    case GammaRule::Kind::Fixed: gammas.push_back(rule.value); break;
    case GammaRule::Kind::Sweep: {
      if (rule.grid.points < 2) throw std::invalid_argument("monte_carlo: sweep needs >= 2 points");
      const double step = (rule.grid.hi - rule.grid.lo) / static_cast<double>(rule.grid.points - 1);
      for (std::size_t i = 0; i < rule.grid.points; ++i)
        gammas.push_back(rule.grid.lo + step * static_cast<double>(i));
      break;
    }
  }

  for (double gamma : gammas) {
    std::vector<std::uint8_t> reject(r, 0);
    parallel_for(r, threads, [&](std::size_t rep) {
      // Substreams depend on the replicate only, so every gamma sees the
      // same samples and bootstrap noise (common random numbers).
      const RawSample sample = simulate_sample(design, Rng::substream(seed, rep, 11));
      const HypothesisProblem problem = build_problem(design, sample, gamma);
      const MixedLogitResampler resampler(design, sample, gamma);
      const TestReport report = run_test(problem, resampler, alpha, lambda_mode, b_draws,
                                         Rng::substream(seed, rep, 22), 1);
      reject[rep] = report.reject ? 1 : 0;
    });
    MonteCarloRow row;
    row.gamma = gamma;
    row.replications = r;
    long hits = 0;
    for (auto f : reject) hits += f;
    row.reject_rate = static_cast<double>(hits) / static_cast<double>(r);
    row.mc_se = std::sqrt(row.reject_rate * (1.0 - row.reject_rate) / static_cast<double>(r));
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace lsysinfer
