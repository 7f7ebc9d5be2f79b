#pragma once

// Convex QP/LP in the form  minimize 1/2 u'Pu + c'u  s.t.  Au + s = b, s >= 0.

#include "scpv/lp.hpp"
#include "scpv/model.hpp"

#include <string>
#include <vector>

namespace scpv {

struct StandardQP {
  Mat P;
  Vec c;
  Mat A;
  Vec b;
  /// Rows that come in (a, b), (-a, -b) pairs representing an equality; both rows of a
  /// pair are flagged. Informational for the solver, used by the encoder.
  std::vector<char> is_eq;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }
  /// Throws DimensionError / std::invalid_argument on malformed data.
  void check() const;
};

struct KKTResiduals {
  double primal = 0.0;  ///< ||Au + s - b||_inf
  double dual = 0.0;    ///< ||Pu + A'y + c||_inf
  double comp = 0.0;    ///< |s'y|
  double sign = 0.0;    ///< max(||min(s,0)||_inf, ||min(y,0)||_inf)
  double max() const;
};

enum class QPStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIter };
std::string to_string(QPStatus s);

struct QPSolution {
  Vec u;
  Vec s;
  Vec y;  ///< multipliers; for PrimalInfeasible the Farkas certificate
  QPStatus status = QPStatus::MaxIter;
  KKTResiduals residuals;
  int iterations = 0;
  double primal_objective(const StandardQP& qp) const;
  double dual_objective(const StandardQP& qp) const;
};

struct QPSettings {
  double tol = 1e-9;
  int max_iter = 200000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;  ///< over-relaxation
  bool polish = true;
};

KKTResiduals kkt_residuals(const StandardQP& qp, const Vec& u, const Vec& s, const Vec& y);

QPSolution solve_qp(const StandardQP& qp, const QPSettings& settings = {});
QPSolution solve_qp(const StandardQP& qp, double tol, int max_iter);

/// Farkas certificate for {u : Au <= b} empty: y >= 0, A'y = 0, b'y < 0, 1'y = 1.
/// Returns an empty vector when the system is feasible.
Vec farkas_certificate(const Mat& A, const Vec& b, double tol = 1e-9);

struct VarBounds {
  Vec lower;
  Vec upper;
};

/// minimize c'u s.t. Au <= b and bounds (not folded into A). For the infeasible case the
/// certificate covers the rows of A followed by the finite bound rows (lower, then upper).
QPSolution solve_lp(const Vec& c, const Mat& A, const Vec& b, const VarBounds& bounds,
                    double tol = 1e-9);

}  // namespace scpv
