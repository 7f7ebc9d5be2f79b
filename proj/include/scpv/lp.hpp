#pragma once

// Dense bounded-variable revised simplex for small linear programs.

#include <Eigen/Dense>

#include <limits>
#include <utility>
#include <vector>

namespace scpv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct SparseRow {
  std::vector<std::pair<int, double>> terms;
  double lo = -kInf;
  double hi = kInf;
};

/// minimize obj'v  s.t.  row.lo <= row.terms . v <= row.hi,  col_lo <= v <= col_hi.
struct LinearProgram {
  int num_cols = 0;
  std::vector<double> obj;
  std::vector<double> col_lo;
  std::vector<double> col_hi;
  std::vector<SparseRow> rows;

  int add_col(double lo, double hi, double cost = 0.0) {
    col_lo.push_back(lo);
    col_hi.push_back(hi);
    obj.push_back(cost);
    return num_cols++;
  }
};

enum class LPStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LPResult {
  LPStatus status = LPStatus::IterationLimit;
  double value = 0.0;
  std::vector<double> x;
  /// Simplex multipliers of the rows and reduced costs of the columns (Optimal only):
  /// obj_j - sum_i row_dual_i * a_ij = reduced_cost_j.
  std::vector<double> row_dual;
  std::vector<double> reduced_cost;
  int iterations = 0;
};

struct SimplexOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-9;
  int max_iter = 50000;
  int refactor_every = 60;
};

LPResult solve_simplex(const LinearProgram& lp, const SimplexOptions& opt = {});

}  // namespace scpv
