#pragma once

// Brute-force minimization of a fixed instance: enumeration of the discrete block, then a
// QP solve (convex continuation) or a refined grid (non-convex continuation).

#include "scpv/model.hpp"

#include <stdexcept>

namespace scpv {

struct OracleOptions {
  /// Grid spacing for non-convex continuous parts.
  double resolution = 1e-2;
  /// Zoom passes around the best grid point (each divides the spacing by 10).
  int refine_levels = 3;
  double feas_tol = 1e-9;
  long long max_points = 1LL << 22;
  int max_grid_dim = 6;
};

struct OracleResult {
  double value = 0.0;
  Vec argmin;
  bool feasible = false;
};

struct ScaleGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Default options with the grid spacing coarsened so the continuous grid of `problem`
/// stays within `budget` points per discrete pattern.
OracleOptions oracle_for(const ParametricProblem& problem, long long budget = 1000000);

OracleResult reference_oracle(const ParametricProblem& problem, const Vec& x,
                              const OracleOptions& opt = {});

}  // namespace scpv
