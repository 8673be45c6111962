#ifndef LSYSINFER_LP_HPP
#define LSYSINFER_LP_HPP

#include <limits>
#include <optional>
#include <vector>

#include "lsysinfer/matrix.hpp"

namespace lsysinfer {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class LPStatus { Optimal, Infeasible, Unbounded };

struct VarBound {
  double lower = 0.0;
  double upper = kInf;
};

// Equality-constrained LP over box-bounded variables. Free variables are
// split internally; inequality rows are expressed through slack variables
// (see LPBuilder).
struct StandardFormLP {
  Vector objective;
  DenseMatrix eq_matrix;
  Vector eq_rhs;
  std::vector<VarBound> var_bounds;
  bool maximize = true;
};

struct LPSolution {
  LPStatus status = LPStatus::Infeasible;
  double value = 0.0;
  Vector point;
  long iterations = 0;
};

struct LPOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  long max_iterations = 0;  // 0 -> 50 * (rows + cols)
};

// Two-phase dense simplex with Bland's anti-cycling rule. Deterministic:
// identical inputs produce identical pivot sequences. Throws on iteration
// limit rather than returning a possibly wrong answer.
LPSolution solve(const StandardFormLP& lp, const LPOptions& opts = {});

// Phase-1 feasibility of {x >= 0 : Ax = beta}. Returns a feasible point or
// nullopt when the cone misses beta.
std::optional<Vector> feasible_cone_point(const DenseMatrix& a, const Vector& beta,
                                          const LPOptions& opts = {});

enum class RowSense { Eq, Le, Ge };

// Convenience layer for assembling mixed equality/inequality programs; rows
// are stored sparse and slack columns are appended on build.
class LPBuilder {
 public:
  int add_var(double lower, double upper, double objective = 0.0);
  void set_objective(int var, double coef);
  void add_row(const std::vector<std::pair<int, double>>& terms, RowSense sense, double rhs);
  void set_maximize(bool maximize) { maximize_ = maximize; }

  // Solves and truncates the point to the user variables (slacks dropped).
  LPSolution solve(const LPOptions& opts = {}) const;

 private:
  struct Row {
    std::vector<std::pair<int, double>> terms;
    RowSense sense;
    double rhs;
  };
  std::vector<VarBound> bounds_;
  Vector objective_;
  std::vector<Row> rows_;
  bool maximize_ = true;
};

}  // namespace lsysinfer

#endif
