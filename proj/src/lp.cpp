#include "lsysinfer/lp.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace lsysinfer {

namespace {

// Internal problem: min c'y s.t. Gy = h, y >= 0.
struct Canonical {
  std::size_t m = 0, n = 0;
  std::vector<double> g;  // row-major m x n
  Vector h;
  Vector c;
  double obj_offset = 0.0;
  bool negate_value = false;

  // recovery of original variables
  enum class Kind { Split, Shift, Neg, Fixed };
  struct VarMap {
    Kind kind;
    std::size_t col = 0;   // first internal column
    double offset = 0.0;   // additive constant (lo for Shift, hi for Neg, value for Fixed)
  };
  std::vector<VarMap> map;
};

Canonical canonicalize(const StandardFormLP& lp) {
  const std::size_t rows = lp.eq_matrix.rows();
  const std::size_t nvar = lp.var_bounds.size();
  if (lp.objective.size() != nvar)
    throw std::invalid_argument("lp: objective length != variable count");
  if (rows > 0 && lp.eq_matrix.cols() != nvar)
    throw std::invalid_argument("lp: eq_matrix col count != variable count");
  if (lp.eq_rhs.size() != rows)
    throw std::invalid_argument("lp: eq_rhs length != row count");

  Canonical cn;
  cn.negate_value = lp.maximize;

  // Pre-scan: column layout and extra rows for doubly bounded variables.
  std::size_t ncols = 0, extra_rows = 0;
  cn.map.resize(nvar);
  for (std::size_t j = 0; j < nvar; ++j) {
    const auto& b = lp.var_bounds[j];
    if (b.lower > b.upper) {
      // empty box: infeasible, signalled with an inconsistent row below
      extra_rows += 1;
      cn.map[j] = {Canonical::Kind::Fixed, 0, 0.0};
    } else if (b.lower == b.upper) {
      cn.map[j] = {Canonical::Kind::Fixed, 0, b.lower};
    } else if (b.lower == -kInf && b.upper == kInf) {
      cn.map[j] = {Canonical::Kind::Split, ncols, 0.0};
      ncols += 2;
    } else if (b.lower == -kInf) {
      cn.map[j] = {Canonical::Kind::Neg, ncols, b.upper};
      ncols += 1;
    } else {
      cn.map[j] = {Canonical::Kind::Shift, ncols, b.lower};
      ncols += 1;
      if (b.upper < kInf) extra_rows += 1;  // y + slack = upper - lower
    }
  }
  // slack columns for the bound rows
  std::size_t bound_slack_base = ncols;
  ncols += extra_rows;

  cn.m = rows + extra_rows;
  cn.n = ncols;
  cn.g.assign(cn.m * cn.n, 0.0);
  cn.h.assign(cn.m, 0.0);
  cn.c.assign(cn.n, 0.0);

  const double sign = lp.maximize ? -1.0 : 1.0;

  for (std::size_t i = 0; i < rows; ++i) cn.h[i] = lp.eq_rhs[i];

  std::size_t next_extra = rows;
  std::size_t next_slack = bound_slack_base;
  for (std::size_t j = 0; j < nvar; ++j) {
    const auto& b = lp.var_bounds[j];
    const auto& vm = cn.map[j];
    const double cj = sign * lp.objective[j];
    switch (vm.kind) {
      case Canonical::Kind::Fixed:
        if (b.lower > b.upper) {
          // 0 = 1 row
          cn.h[next_extra] = 1.0;
          ++next_extra;
        } else {
          for (std::size_t i = 0; i < rows; ++i) cn.h[i] -= lp.eq_matrix(i, j) * vm.offset;
          cn.obj_offset += cj * vm.offset;
        }
        break;
      case Canonical::Kind::Split:
        for (std::size_t i = 0; i < rows; ++i) {
          cn.g[i * cn.n + vm.col] = lp.eq_matrix(i, j);
          cn.g[i * cn.n + vm.col + 1] = -lp.eq_matrix(i, j);
        }
        cn.c[vm.col] = cj;
        cn.c[vm.col + 1] = -cj;
        break;
      case Canonical::Kind::Neg:
        for (std::size_t i = 0; i < rows; ++i) {
          cn.g[i * cn.n + vm.col] = -lp.eq_matrix(i, j);
          cn.h[i] -= lp.eq_matrix(i, j) * vm.offset;
        }
        cn.c[vm.col] = -cj;
        cn.obj_offset += cj * vm.offset;
        break;
      case Canonical::Kind::Shift:
        for (std::size_t i = 0; i < rows; ++i) {
          cn.g[i * cn.n + vm.col] = lp.eq_matrix(i, j);
          cn.h[i] -= lp.eq_matrix(i, j) * vm.offset;
        }
        cn.c[vm.col] = cj;
        cn.obj_offset += cj * vm.offset;
        if (b.upper < kInf) {
          cn.g[next_extra * cn.n + vm.col] = 1.0;
          cn.g[next_extra * cn.n + next_slack] = 1.0;
          cn.h[next_extra] = b.upper - b.lower;
          ++next_extra;
          ++next_slack;
        }
        break;
    }
  }
  return cn;
}

// Thrown when basis repair leaves an artificial basic at nonzero value; the
// caller restores feasibility by rerunning phase 1 from the repaired basis.
struct RepairInfeasible {};

struct Tableau {
  std::size_t m, n;        // n structural columns; artificials follow
  std::size_t cols;        // n + original row count (column count incl. artificials)
  std::size_t width;       // cols + 1 (rhs last)
  std::vector<double> t;   // m x width
  std::vector<double> t0;  // pristine copy of the initial rows, same layout
  Vector cost;             // length cols, current reduced costs
  Vector base_cost;        // phase objective on columns, length cols
  std::vector<std::size_t> basis;
  long iterations = 0;

  // Split free variables produce exactly negated column pairs. A column whose
  // partner is basic has reduced cost exactly zero, so it may never enter;
  // letting roundoff admit it makes the basis exactly singular.
  std::vector<std::size_t> partner;  // cols if none
  std::vector<char> is_basic;        // length cols
  std::vector<std::size_t> art_col;  // per row, its artificial column in t0
  bool repair_needs_zero_rhs = false;  // phase 2: repaired rows must stay degenerate

  bool blocked(std::size_t j) const { return partner[j] < partner.size() && is_basic[partner[j]]; }

  // Lexicographic reference: a virtual identity block appended at the start
  // of each simplex phase and updated alongside the tableau rows. Ties in the
  // ratio test are resolved on (rhs, lex)/pivot, which rules out cycling.
  std::vector<double> lex;

  double& at(std::size_t i, std::size_t j) { return t[i * width + j]; }
  double& rhs(std::size_t i) { return t[i * width + width - 1]; }
  double& lex_at(std::size_t i, std::size_t j) { return lex[i * m + j]; }

  void reset_lex() {
    lex.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) lex_at(i, i) = 1.0;
  }

  void rebuild_cost() {
    cost = base_cost;
    for (std::size_t i = 0; i < m; ++i) {
      const double f = base_cost[basis[i]];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < cols; ++k) cost[k] -= f * at(i, k);
    }
    for (std::size_t i = 0; i < m; ++i) cost[basis[i]] = 0.0;
  }

  // Recomputes every row exactly from the pristine data and the current
  // basis, discarding the roundoff accumulated by pivoting. Long degenerate
  // pivot chains otherwise drift enough to corrupt ratio tests, and a
  // drift-admitted pivot can leave an exactly singular basis behind; a
  // dependent column is then repaired with the artificial of a spare row,
  // which is legitimate as long as that row ends up with zero rhs.
  void refactorize() {
    std::vector<std::size_t> repaired;
    std::vector<double> b(m * m), binv(m * m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t i = 0; i < m; ++i) b[r * m + i] = t0[r * width + basis[i]];
      binv[r * m + r] = 1.0;
    }
    for (std::size_t k = 0; k < m; ++k) {
      std::size_t piv = k;
      for (std::size_t r = k + 1; r < m; ++r)
        if (std::fabs(b[r * m + k]) > std::fabs(b[piv * m + k])) piv = r;
      if (std::fabs(b[piv * m + k]) < 1e-11) {
        // Repair: transformed artificial columns are exactly the binv
        // columns; pick the one with the largest entry in the spare rows.
        std::size_t best_r = m, best_row = m;
        double best = 1e-11;
        for (std::size_t rc = 0; rc < m; ++rc) {
          if (is_basic[art_col[rc]]) continue;
          for (std::size_t row = k; row < m; ++row)
            if (std::fabs(binv[row * m + rc]) > best) {
              best = std::fabs(binv[row * m + rc]);
              best_r = rc;
              best_row = row;
            }
        }
        if (best_r == m) throw std::runtime_error("lp: singular basis on refactorization");
        is_basic[basis[k]] = 0;
        basis[k] = art_col[best_r];
        is_basic[basis[k]] = 1;
        for (std::size_t r = 0; r < m; ++r) b[r * m + k] = binv[r * m + best_r];
        piv = best_row;
        repaired.push_back(k);
      }
      if (piv != k)
        for (std::size_t j = 0; j < m; ++j) {
          std::swap(b[piv * m + j], b[k * m + j]);
          std::swap(binv[piv * m + j], binv[k * m + j]);
        }
      const double inv = 1.0 / b[k * m + k];
      for (std::size_t j = 0; j < m; ++j) {
        b[k * m + j] *= inv;
        binv[k * m + j] *= inv;
      }
      for (std::size_t r = 0; r < m; ++r) {
        if (r == k) continue;
        const double f = b[r * m + k];
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) {
          b[r * m + j] -= f * b[k * m + j];
          binv[r * m + j] -= f * binv[k * m + j];
        }
      }
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < width; ++k) {
        double acc = 0.0;
        for (std::size_t r = 0; r < m; ++r) acc += binv[i * m + r] * t0[r * width + k];
        at(i, k) = acc;
      }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t r = 0; r < m; ++r) at(r, basis[i]) = (r == i) ? 1.0 : 0.0;
    double scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::fabs(rhs(i)));
    for (std::size_t i = 0; i < m; ++i)
      if (rhs(i) < 0.0 && rhs(i) > -1e-9 * scale) rhs(i) = 0.0;
    {
      double rmin = 0.0; std::size_t ri = 0;
      for (std::size_t i = 0; i < m; ++i)
        if (rhs(i) < rmin) { rmin = rhs(i); ri = i; }
      if (rmin < -1e-6 * scale)
        std::fprintf(stderr, "RMIN iter=%ld m=%zu rmin=%.3e row=%zu basis=%zu\n", iterations, m, rmin, ri, basis[ri]);
    }
    reset_lex();
    rebuild_cost();
    if (!repaired.empty()) {
      double worst = 0.0;
      for (std::size_t k : repaired) worst = std::max(worst, std::fabs(rhs(k)));
      std::fprintf(stderr, "REPAIR m=%zu iter=%ld count=%zu worst=%.3e scale=%.3e flag=%d\n",
                   m, iterations, repaired.size(), worst, scale, (int)repair_needs_zero_rhs);
    }
    if (repair_needs_zero_rhs)
      for (std::size_t k : repaired)
        if (std::fabs(rhs(k)) > 1e-6 * scale) throw RepairInfeasible{};
  }

  void pivot(std::size_t r, std::size_t j) {
    is_basic[basis[r]] = 0;
    is_basic[j] = 1;
    const double piv = at(r, j);
    const double inv = 1.0 / piv;
    for (std::size_t k = 0; k < width; ++k) at(r, k) *= inv;
    for (std::size_t k = 0; k < m; ++k) lex_at(r, k) *= inv;
    at(r, j) = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r) continue;
      const double f = at(i, j);
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < width; ++k) at(i, k) -= f * at(r, k);
      for (std::size_t k = 0; k < m; ++k) lex_at(i, k) -= f * lex_at(r, k);
      at(i, j) = 0.0;
    }
    const double f = cost[j];
    if (f != 0.0) {
      for (std::size_t k = 0; k + 1 < width; ++k) cost[k] -= f * at(r, k);
      cost[j] = 0.0;
      // rhs of cost row is tracked separately by callers
    }
    basis[r] = j;
    ++iterations;
  }
};

// Runs simplex minimization on the current cost row with Dantzig pricing and
// a lexicographic ratio test (the anti-cycling device the all-zero rhs cone
// programs need). Resets the lexicographic reference on entry.
// allow_artificials controls whether columns >= n may enter.
// Returns true when optimal, false when unbounded.
bool simplex_loop(Tableau& tb, bool allow_artificials, const LPOptions& opts, long max_iter) {
  const std::size_t limit = allow_artificials ? tb.cols : tb.n;
  tb.reset_lex();
  tb.rebuild_cost();
  long since_refactor = 0;
  long stalled = 0;
  int perturb_rounds = 0;
  bool bland = false;
  bool fresh = true;      // no pivots since the last refactorize
  bool perturbed = false;  // rhs carries anti-stalling offsets
  double last_verdict_obj = kInf;
  int no_progress = 0;
  // Ban list: after a degenerate swap the ousted column may not re-enter for
  // a while, otherwise two near-parallel columns can kick each other through
  // the same zero-step row forever while pricing never tries anyone else.
  std::vector<long> taboo_until(tb.cols, 0);
  // Near-degenerate vertex clusters stall Dantzig pricing: pivots with steps
  // of roundoff size swap a few columns forever while the objective gain
  // underflows. Distinct positive rhs offsets make every ratio test
  // nondegenerate; refactorization recomputes the true rhs, so the offsets
  // never reach the reported solution.
  const auto apply_perturb = [&tb] {
    double rs = 1.0;
    for (std::size_t i = 0; i < tb.m; ++i) rs = std::max(rs, tb.rhs(i));
    for (std::size_t i = 0; i < tb.m; ++i)
      tb.rhs(i) += 1e-8 * rs * (1.0 + static_cast<double>((i * 2654435761ull) % 1021) / 1021.0);
  };
  const auto refresh = [&] {
    tb.refactorize();
    since_refactor = 0;
    fresh = true;
    if (perturbed) apply_perturb();
  };
  for (;;) {
    if (tb.iterations > max_iter) throw std::runtime_error("lp: iteration limit exceeded");
    if (since_refactor >= 24) refresh();

    std::size_t enter = limit;
    double most = -opts.opt_tol;
    for (std::size_t j = 0; j < limit; ++j)
      if (tb.cost[j] < most && !tb.blocked(j) && taboo_until[j] <= tb.iterations) {
        most = tb.cost[j];
        enter = j;
        if (bland) break;
      }
    if (enter == limit) {
      bool banned = false;
      for (std::size_t j = 0; j < limit; ++j)
        if (taboo_until[j] > tb.iterations) {
          taboo_until[j] = 0;
          banned = true;
        }
      if (banned) continue;
      // Confirm a verdict only on a freshly refactorized, unperturbed tableau.
      if (!fresh || perturbed) {
        // An ill-conditioned basis leaves reduced costs noisy at a level the
        // optimality tolerance cannot see: refactorized costs re-admit a
        // column whose pivot immediately looks optimal again. When repeated
        // verdict refreshes leave the objective unchanged, the vertex is
        // optimal to the precision the data supports.
        double obj = 0.0;
        for (std::size_t i = 0; i < tb.m; ++i) obj += tb.base_cost[tb.basis[i]] * tb.rhs(i);
        if (tb.iterations > 1000 && tb.iterations % 100 < 3)
          std::fprintf(stderr, "VERDICT it=%ld obj=%.15g np=%d\n", tb.iterations, obj, no_progress);
        if (std::fabs(obj - last_verdict_obj) <= 1e-9 * (1.0 + std::fabs(obj))) {
          if (++no_progress >= 20) {
            std::fprintf(stderr, "NOPROG-ACCEPT it=%ld obj=%.15g\n", tb.iterations, obj);
            return true;
          }
        } else {
          no_progress = 0;
        }
        last_verdict_obj = obj;
        perturbed = false;
        refresh();
        stalled = 0;
        continue;
      }
      return true;
    }

    // Minimum-ratio rows, then lexicographic order on (rhs, lex)/pivot.
    // A degenerate row only blocks through an entry of honest magnitude:
    // pivoting a zero-rhs row on roundoff dirt rescales the row by its
    // reciprocal and corrupts the whole tableau.
    double rhs_scale = 1.0;
    for (std::size_t i = 0; i < tb.m; ++i) rhs_scale = std::max(rhs_scale, tb.rhs(i));
    const double degen = 1e-9 * rhs_scale;
    const auto eligible = [&](std::size_t i, double a) {
      return a > (tb.rhs(i) <= degen ? 1e-7 : 1e-11);
    };
    double best = kInf;
    for (std::size_t i = 0; i < tb.m; ++i) {
      const double a = tb.at(i, enter);
      if (eligible(i, a)) best = std::min(best, tb.rhs(i) / a);
    }
    if (best == kInf) {
      if (!fresh || perturbed) {
        perturbed = false;
        refresh();
        stalled = 0;
        continue;
      }
      return false;  // unbounded
    }

    // Among blocking rows, insist on a pivot of near-maximal magnitude first
    // (a tiny pivot rescales its row by the reciprocal and wrecks the
    // tableau), then settle remaining ties lexicographically.
    const double cutoff = best + 1e-9 * std::fabs(best) + 1e-12;
    double amax = 0.0;
    for (std::size_t i = 0; i < tb.m; ++i) {
      const double a = tb.at(i, enter);
      if (eligible(i, a) && tb.rhs(i) / a <= cutoff) amax = std::max(amax, a);
    }
    std::size_t leave = tb.m;
    for (std::size_t i = 0; i < tb.m; ++i) {
      const double a = tb.at(i, enter);
      if (!eligible(i, a) || tb.rhs(i) / a > cutoff || a < 0.1 * amax) continue;
      if (bland) {
        leave = i;
        break;
      }
      if (leave == tb.m) {
        leave = i;
        continue;
      }
      const double b = tb.at(leave, enter);
      for (std::size_t k = 0; k < tb.m; ++k) {
        const double vi = tb.lex_at(i, k) / a;
        const double vl = tb.lex_at(leave, k) / b;
        const double gap = vi - vl;
        if (std::fabs(gap) > 1e-12 * (1.0 + std::fabs(vi) + std::fabs(vl))) {
          if (gap < 0.0) leave = i;
          break;
        }
      }
    }
    // A small pivot is only trustworthy on a freshly refactorized tableau:
    // in a drifted one it may be pure accumulated roundoff, and pivoting on
    // it produces an exactly singular basis.
    if (tb.at(leave, enter) < 1e-5 && !fresh) {
      refresh();
      continue;
    }
    const double step = tb.rhs(leave) / tb.at(leave, enter);
    if (tb.iterations > 1000 && tb.iterations % 500 < 8)
      std::fprintf(stderr, "IT it=%ld enter=%zu leave=%zu piv=%.3e step=%.3e cost=%.6e stalled=%ld scale=%.3e\n",
                   tb.iterations, enter, leave, tb.at(leave, enter), step, most, stalled, rhs_scale);
    if (step <= 1e-9 * rhs_scale)
      ++stalled;
    else
      stalled = 0;
    if (tb.iterations > 1000 && tb.iterations % 500 < 8)
      std::fprintf(stderr, "POST stalled=%ld\n", stalled);
    if (stalled > 200) {
      double obj = 0.0;
      for (std::size_t i = 0; i < tb.m; ++i) obj += tb.base_cost[tb.basis[i]] * tb.rhs(i);
      std::fprintf(stderr, "STALL it=%ld rounds=%d obj=%.12g enter=%zu leave=%zu step=%.3e cost=%.3e\n",
                   tb.iterations, perturb_rounds, obj, enter, leave, step, most);
      stalled = 0;
      if (++perturb_rounds > 50) {
        bland = true;  // last resort for exact ties the offsets cannot split
      } else {
        apply_perturb();
        perturbed = true;
        continue;
      }
    }
    if (step <= 1e-9 * rhs_scale) taboo_until[tb.basis[leave]] = tb.iterations + 25;
    tb.pivot(leave, enter);
    ++since_refactor;
    fresh = false;
  }
}

}  // namespace

static LPSolution solve_impl(const StandardFormLP& lp, const LPOptions& opts);

LPSolution solve(const StandardFormLP& lp, const LPOptions& opts) {
  try {
    return solve_impl(lp, opts);
  } catch (const std::exception& e) {
    std::FILE* f = std::fopen("/tmp/lp_fail.txt", "w");
    if (f) {
      const std::size_t nv = lp.var_bounds.size(), nr = lp.eq_rhs.size();
      std::fprintf(f, "maximize %d\nnvar %zu\nnrow %zu\n", (int)lp.maximize, nv, nr);
      std::fprintf(f, "obj");
      for (double v : lp.objective) std::fprintf(f, " %.17g", v);
      std::fprintf(f, "\nbounds");
      for (const auto& b : lp.var_bounds) std::fprintf(f, " %.17g %.17g", b.lower, b.upper);
      std::fprintf(f, "\nrhs");
      for (double v : lp.eq_rhs) std::fprintf(f, " %.17g", v);
      std::fprintf(f, "\n");
      for (std::size_t i = 0; i < nr; ++i) {
        std::fprintf(f, "row");
        for (std::size_t j = 0; j < nv; ++j) std::fprintf(f, " %.17g", lp.eq_matrix(i, j));
        std::fprintf(f, "\n");
      }
      std::fclose(f);
      std::fprintf(stderr, "LPFAIL dumped: %s\n", e.what());
    }
    throw;
  }
}

static LPSolution solve_impl(const StandardFormLP& lp, const LPOptions& opts) {
  for (double x : lp.objective)
    if (!std::isfinite(x)) throw std::invalid_argument("lp: non-finite objective");
  for (double x : lp.eq_rhs)
    if (!std::isfinite(x)) throw std::invalid_argument("lp: non-finite rhs");

  Canonical cn = canonicalize(lp);
  const std::size_t m = cn.m, n = cn.n;
  const long max_iter =
      opts.max_iterations > 0 ? opts.max_iterations : 50L * static_cast<long>(m + n);

  // Equilibrate rows then columns to unit max magnitude. Power-of-two scales
  // keep the transform exact; mixed row scales (1 vs sqrt(n) blocks) are what
  // let roundoff dirt pass the absolute pivot-eligibility threshold.
  const auto pow2_near = [](double v) { return std::exp2(std::round(std::log2(v))); };
  Vector col_scale(n, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = 0.0;
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, std::fabs(cn.g[i * n + j]));
    if (mx <= 0.0) continue;
    const double r = pow2_near(mx);
    for (std::size_t j = 0; j < n; ++j) cn.g[i * n + j] /= r;
    cn.h[i] /= r;
  }
  for (std::size_t j = 0; j < n; ++j) {
    double mx = 0.0;
    for (std::size_t i = 0; i < m; ++i) mx = std::max(mx, std::fabs(cn.g[i * n + j]));
    if (mx <= 0.0) continue;
    col_scale[j] = pow2_near(mx);
    for (std::size_t i = 0; i < m; ++i) cn.g[i * n + j] /= col_scale[j];
    cn.c[j] /= col_scale[j];
  }

  Tableau tb;
  tb.m = m;
  tb.n = n;
  tb.cols = n + m;
  tb.width = n + m + 1;
  tb.t.assign(m * tb.width, 0.0);
  tb.basis.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double s = cn.h[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tb.at(i, j) = s * cn.g[i * n + j];
    tb.at(i, n + i) = 1.0;
    tb.rhs(i) = s * cn.h[i];
    tb.basis[i] = n + i;
  }
  tb.t0 = tb.t;
  if (std::FILE* f = std::fopen("/tmp/init.txt", "w")) {
    for (std::size_t i = 0; i < m; ++i) {
      std::fprintf(f, "r");
      for (std::size_t j = 0; j < n; ++j) std::fprintf(f, " %.17g", tb.t0[i * tb.width + j]);
      std::fprintf(f, " %.17g\n", tb.t0[i * tb.width + tb.width - 1]);
    }
    std::fclose(f);
  }
  tb.partner.assign(tb.cols, tb.cols);
  for (const auto& vm : cn.map)
    if (vm.kind == Canonical::Kind::Split) {
      tb.partner[vm.col] = vm.col + 1;
      tb.partner[vm.col + 1] = vm.col;
    }
  tb.is_basic.assign(tb.cols, 0);
  for (std::size_t i = 0; i < m; ++i) tb.is_basic[tb.basis[i]] = 1;
  tb.art_col.resize(m);
  for (std::size_t i = 0; i < m; ++i) tb.art_col[i] = n + i;

  // Phase 1: minimize the sum of artificials, from the all-artificial basis.
  // Rerun whenever row surgery or a failed repair disturbs feasibility.
  double h_scale = 1.0;
  for (double v : cn.h) h_scale = std::max(h_scale, std::fabs(v));
  const auto phase1_from_scratch = [&]() -> bool {
    tb.is_basic.assign(tb.cols, 0);
    for (std::size_t i = 0; i < tb.m; ++i) {
      tb.basis[i] = tb.art_col[i];
      tb.is_basic[tb.basis[i]] = 1;
    }
    tb.base_cost.assign(tb.cols, 0.0);
    for (std::size_t j = n; j < tb.cols; ++j) tb.base_cost[j] = 1.0;
    tb.repair_needs_zero_rhs = false;
    tb.refactorize();
    if (!simplex_loop(tb, true, opts, max_iter))
      throw std::runtime_error("lp: phase-1 unbounded (internal error)");
    tb.refactorize();
    double resid = 0.0;
    for (std::size_t i = 0; i < tb.m; ++i)
      if (tb.basis[i] >= n) resid += std::fabs(tb.rhs(i));
    return resid <= 1e-7 * h_scale;
  };
  if (!phase1_from_scratch()) {
    LPSolution sol;
    sol.status = LPStatus::Infeasible;
    sol.iterations = tb.iterations;
    return sol;
  }
  std::fprintf(stderr, "P1END iter=%ld\n", tb.iterations);

  // Drive leftover artificials out of the basis. A row with no structural
  // pivot of honest magnitude is nearly dependent on the surviving rows; its
  // reduced form (this tableau row) is the same constraint with the shared
  // part eliminated. Deleting it is only safe when that reduced form is pure
  // noise: a small-but-real reduced row pins a direction along which the
  // optimum moves O(1), so it is instead written back rescaled to unit
  // magnitude, which repairs the conditioning and admits an honest pivot.
  // One row at a time: mutually dependent rows each look redundant against a
  // set containing the other.
  const auto drive_out_and_compact = [&]() -> bool {
    bool surgery = false;
    for (std::size_t round = 0; round < 4 * m + 8; ++round) {
      for (std::size_t i = 0; i < tb.m; ++i) {
        if (tb.basis[i] < n) continue;
        std::size_t piv = n;
        double piv_mag = 1e-6;
        for (std::size_t j = 0; j < n; ++j) {
          if (std::fabs(tb.at(i, j)) > piv_mag && !tb.blocked(j)) {
            piv = j;
            piv_mag = std::fabs(tb.at(i, j));
          }
        }
        if (piv < n) tb.pivot(i, piv);
      }
      std::size_t drop = tb.m;
      for (std::size_t i = 0; i < tb.m && drop == tb.m; ++i)
        if (tb.basis[i] >= n) drop = i;
      if (drop == tb.m) break;
      tb.refactorize();
      if (tb.basis[drop] < n) continue;
      double mx = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (!tb.blocked(j)) mx = std::max(mx, std::fabs(tb.at(drop, j)));
      if (mx >= 1e-9) {
        std::fprintf(stderr, "RESCALE iter=%ld row=%zu maxentry=%.3e rhs=%.3e\n", tb.iterations, drop, mx, tb.rhs(drop));
        const double s = (tb.rhs(drop) < 0.0 ? -1.0 : 1.0) / mx;
        for (std::size_t j = 0; j < n; ++j) tb.t0[drop * tb.width + j] = s * tb.at(drop, j);
        for (std::size_t j = n; j < tb.cols; ++j) tb.t0[drop * tb.width + j] = 0.0;
        tb.t0[drop * tb.width + tb.art_col[drop]] = 1.0;
        tb.t0[drop * tb.width + tb.width - 1] = s * tb.rhs(drop);
        tb.is_basic[tb.basis[drop]] = 0;
        tb.basis[drop] = tb.art_col[drop];
        tb.is_basic[tb.basis[drop]] = 1;
        tb.refactorize();
        return true;
      }
      std::fprintf(stderr, "DEL iter=%ld row=%zu maxentry=%.3e rhs=%.3e\n", tb.iterations, drop, mx, tb.rhs(drop));
      tb.is_basic[tb.basis[drop]] = 0;
      for (std::size_t i = drop + 1; i < tb.m; ++i) {
        for (std::size_t k = 0; k < tb.width; ++k) {
          tb.t[(i - 1) * tb.width + k] = tb.t[i * tb.width + k];
          tb.t0[(i - 1) * tb.width + k] = tb.t0[i * tb.width + k];
        }
        tb.basis[i - 1] = tb.basis[i];
        tb.art_col[i - 1] = tb.art_col[i];
      }
      --tb.m;
      tb.basis.resize(tb.m);
      tb.art_col.resize(tb.m);
      tb.t.resize(tb.m * tb.width);
      tb.t0.resize(tb.m * tb.width);
      tb.refactorize();
      return true;
    }
    return surgery;
  };
  // Surgery moves the basis to a vertex of the rewritten system that need not
  // be feasible, and later redundancy measurements made from a disturbed
  // basis are unreliable; so after every single rewrite or deletion rerun
  // phase 1 before judging the next row.
  for (int round = 0; drive_out_and_compact(); ++round) {
    if (round >= static_cast<int>(2 * m + 8)) throw std::runtime_error("lp: row cleanup did not converge");
    if (!phase1_from_scratch()) {
      LPSolution sol;
      sol.status = LPStatus::Infeasible;
      sol.iterations = tb.iterations;
      return sol;
    }
  }

  // Phase 2 on the canonical objective, from a freshly refactorized tableau
  // so no phase-1 drift carries over. If a basis repair ever leaves an
  // artificial at nonzero value, rerun phase 1 to restore feasibility.
  std::fprintf(stderr, "P2START iter=%ld m=%zu\n", tb.iterations, tb.m);
  Vector phase2_cost(tb.cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) phase2_cost[j] = cn.c[j];
  bool optimal = false;
  for (int attempt = 0;; ++attempt) {
    try {
      tb.base_cost = phase2_cost;
      tb.repair_needs_zero_rhs = true;
      tb.refactorize();
      {
        double cmin = 0.0; std::size_t cj = 0;
        for (std::size_t j = 0; j < tb.n; ++j)
          if (tb.cost[j] < cmin) { cmin = tb.cost[j]; cj = j; }
        double o = 0.0;
        for (std::size_t i = 0; i < tb.m; ++i) o += tb.base_cost[tb.basis[i]] * tb.rhs(i);
        double rmin = 0.0;
        for (std::size_t i = 0; i < tb.m; ++i) rmin = std::min(rmin, tb.rhs(i));
        std::fprintf(stderr, "P2GO m=%zu cmin=%.3e at %zu obj=%.6g rmin=%.3e\n", tb.m, cmin, cj, o, rmin);
        if (std::FILE* f = std::fopen("/tmp/kept.txt", "w")) {
          std::fprintf(f, "m %zu n %zu\nc", tb.m, n);
          for (std::size_t j = 0; j < n; ++j) std::fprintf(f, " %.17g", cn.c[j]);
          std::fprintf(f, "\n");
          for (std::size_t i = 0; i < tb.m; ++i) {
            std::fprintf(f, "r");
            for (std::size_t j = 0; j < n; ++j) std::fprintf(f, " %.17g", tb.t0[i * tb.width + j]);
            std::fprintf(f, " %.17g\n", tb.t0[i * tb.width + tb.width - 1]);
          }
          std::fclose(f);
        }
      }
      optimal = simplex_loop(tb, false, opts, max_iter);
      break;
    } catch (const RepairInfeasible&) {
      if (attempt >= 2) throw std::runtime_error("lp: basis repair failed to restore feasibility");
      if (!phase1_from_scratch()) throw std::runtime_error("lp: basis repair failed to restore feasibility");
      for (int round = 0; drive_out_and_compact(); ++round) {
        if (round >= static_cast<int>(2 * m + 8))
          throw std::runtime_error("lp: row cleanup did not converge");
        if (!phase1_from_scratch()) throw std::runtime_error("lp: basis repair failed to restore feasibility");
      }
    }
  }
  if (!optimal) {
    LPSolution sol;
    sol.status = LPStatus::Unbounded;
    sol.iterations = tb.iterations;
    return sol;
  }

  Vector y(n, 0.0);
  double objval = 0.0;
  for (std::size_t i = 0; i < tb.m; ++i) {
    if (tb.basis[i] < n) {
      y[tb.basis[i]] = tb.rhs(i);
      objval += cn.c[tb.basis[i]] * tb.rhs(i);
    }
  }
  {
    double worst = 0.0; std::size_t wrow = 0;
    for (std::size_t i = 0; i < tb.m; ++i) {
      double acc = -tb.t0[i * tb.width + tb.width - 1];
      for (std::size_t j = 0; j < n; ++j) acc += tb.t0[i * tb.width + j] * y[j];
      if (std::fabs(acc) > worst) { worst = std::fabs(acc); wrow = i; }
    }
    std::fprintf(stderr, "FINAL resid=%.3e row=%zu m=%zu basis_art=%d\n", worst, wrow, tb.m,
                 (int)[&]{ int c=0; for (auto b : tb.basis) if (b >= n) ++c; return c; }());
  }
  // The scaled objective already matches the original one; only the variable
  // values need the column scales undone.
  for (std::size_t j = 0; j < n; ++j) y[j] /= col_scale[j];

  LPSolution sol;
  sol.status = LPStatus::Optimal;
  sol.iterations = tb.iterations;
  const std::size_t nvar = lp.var_bounds.size();
  sol.point.assign(nvar, 0.0);
  for (std::size_t j = 0; j < nvar; ++j) {
    const auto& vm = cn.map[j];
    switch (vm.kind) {
      case Canonical::Kind::Fixed:
        sol.point[j] = vm.offset;
        break;
      case Canonical::Kind::Split:
        sol.point[j] = y[vm.col] - y[vm.col + 1];
        break;
      case Canonical::Kind::Neg:
        sol.point[j] = vm.offset - y[vm.col];
        break;
      case Canonical::Kind::Shift:
        sol.point[j] = vm.offset + y[vm.col];
        break;
    }
  }
  double value = objval + cn.obj_offset;
  sol.value = cn.negate_value ? -value : value;
  return sol;
}

std::optional<Vector> feasible_cone_point(const DenseMatrix& a, const Vector& beta,
                                          const LPOptions& opts) {
  if (beta.size() != a.rows()) throw std::invalid_argument("feasible_cone_point: dimension mismatch");
  StandardFormLP lp;
  lp.objective.assign(a.cols(), 0.0);
  lp.eq_matrix = a;
  lp.eq_rhs = beta;
  lp.var_bounds.assign(a.cols(), VarBound{0.0, kInf});
  lp.maximize = false;
  LPSolution sol = solve(lp, opts);
  if (sol.status == LPStatus::Optimal) return sol.point;
  if (sol.status == LPStatus::Infeasible) return std::nullopt;
  throw std::runtime_error("feasible_cone_point: solver failure");
}

int LPBuilder::add_var(double lower, double upper, double objective) {
  bounds_.push_back(VarBound{lower, upper});
  objective_.push_back(objective);
  return static_cast<int>(bounds_.size()) - 1;
}

void LPBuilder::set_objective(int var, double coef) {
  objective_.at(static_cast<std::size_t>(var)) = coef;
}

void LPBuilder::add_row(const std::vector<std::pair<int, double>>& terms, RowSense sense,
                        double rhs) {
  rows_.push_back(Row{terms, sense, rhs});
}

LPSolution LPBuilder::solve(const LPOptions& opts) const {
  const std::size_t nuser = bounds_.size();
  std::size_t nslack = 0;
  for (const auto& r : rows_)
    if (r.sense != RowSense::Eq) ++nslack;

  StandardFormLP lp;
  lp.maximize = maximize_;
  lp.var_bounds = bounds_;
  lp.objective = objective_;
  for (std::size_t k = 0; k < nslack; ++k) {
    lp.var_bounds.push_back(VarBound{0.0, kInf});
    lp.objective.push_back(0.0);
  }
  lp.eq_matrix = DenseMatrix(rows_.size(), nuser + nslack);
  lp.eq_rhs.resize(rows_.size());
  std::size_t slack = nuser;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    for (const auto& [j, v] : r.terms)
      lp.eq_matrix(i, static_cast<std::size_t>(j)) += v;
    if (r.sense == RowSense::Le) lp.eq_matrix(i, slack++) = 1.0;
    if (r.sense == RowSense::Ge) lp.eq_matrix(i, slack++) = -1.0;
    lp.eq_rhs[i] = r.rhs;
  }
  LPSolution sol = lsysinfer::solve(lp, opts);
  if (sol.point.size() > nuser) sol.point.resize(nuser);
  return sol;
}

}  // namespace lsysinfer
