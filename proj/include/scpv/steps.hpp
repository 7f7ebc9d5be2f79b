#pragma once

// Step subproblem builders shared by the forward runner (T = double) and the encoder
// (T = Expr). Every QP step is written as
//   minimize 1/2 u'Pu + c'u  s.t.  A u + s = b, s >= 0
// where c, A, b may depend on the parameter and on the incoming iterate.

#include "scpv/expr.hpp"
#include "scpv/model.hpp"
#include "scpv/qp.hpp"

#include <vector>

namespace scpv {

template <class T>
struct IterState {
  std::vector<T> z;
  /// |z| carried from the sparsity relaxation (empty otherwise).
  std::vector<T> abs;
  /// Sparsity support from the rounding step (empty otherwise).
  std::vector<T> support;
};

/// How the encoder bounds an entry of u.
struct UBound {
  enum Kind { Z, Row, Abs } kind = Z;
  int index = 0;  ///< z coordinate (Z, Abs) or row (Row)
  int sign = 1;   ///< Row: u in [0, sup(sign * (row without aux terms - b))]
};

template <class T>
struct StepQP {
  Mat P;
  std::vector<T> c;
  std::vector<std::vector<T>> A;
  std::vector<T> b;
  std::vector<char> is_eq;
  std::vector<UBound> ubound;
  /// Next iterate coordinate j is u[z_from_u[j]], or the incoming z_j when -1.
  std::vector<int> z_from_u;
  /// Sparsity relaxation: |z_j| is u[abs_from_u[j]].
  std::vector<int> abs_from_u;
  /// Columns of u that are auxiliary (slacks, splits); excluded from Row bounds.
  std::vector<char> aux;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }
};

/// Builds the subproblem of a QP step (everything except Round).
template <class T>
StepQP<T> build_step_qp(const StepSpec& spec, const ParametricProblem& problem,
                        const std::vector<T>& x, const IterState<T>& in);

template <class T>
IterState<T> next_state(const StepQP<T>& qp, const std::vector<T>& u, const IterState<T>& in);

StandardQP to_standard(const StepQP<double>& qp);

struct RoundResult {
  IterState<double> state;
  /// Sparsity: threshold (k-th largest magnitude, or 0 when fewer than k nonzeros).
  double round_threshold_t = 0.0;
};

/// Forward rounding. Binary ties (0.5) go to 1, +-1 ties (0) go to +1, sparsity magnitude
/// ties keep the lower index.
RoundResult round_forward(const ParametricProblem& problem, const IterState<double>& in);

// Shared expression helpers.
template <class T>
std::vector<T> to_scalars(const Vec& v) {
  return std::vector<T>(v.data(), v.data() + v.size());
}
template <class T>
T quad_value(const QuadraticForm& q, const std::vector<T>& z, const std::vector<T>& x,
             bool include_offset = true);

}  // namespace scpv
