#pragma once

// Compilation of (problem, schedule, parameter set, metric, inexactness) into an explicit
// VerificationProgram whose optimal value is the worst-case metric.

#include "scpv/model.hpp"
#include "scpv/program.hpp"
#include "scpv/scprun.hpp"
#include "scpv/steps.hpp"

#include <string>
#include <vector>

namespace scpv {

struct InexactnessModel {
  enum Kind { Exact, DistanceToOpt, KKTResidual } kind = Exact;
  double eps = 0.0;

  /// "exact", "dist:EPS" or "kkt:EPS".
  static InexactnessModel parse(const std::string& s);
  std::string str() const;
};

struct EncoderOptions {
  double dual_cap = 1e4;
  /// The caller vouches that z^K is feasible (needed for the suboptimality metric).
  bool final_feasibility_declared = false;
  /// Points known to lie in the feasible set for every parameter. Each adds the explicit
  /// optimality cut f(z*, x) <= f(e, x) to the suboptimality program.
  std::vector<Vec> optimality_candidates;
  /// Drop the feasibility description of z* and keep only the candidate cuts plus
  /// z* in the candidate set (enumerated-optimality formulation).
  bool enumerated_optimality = false;
};

struct QPHandles {
  std::vector<int> u;        ///< downstream u variables
  std::vector<int> u_exact;  ///< DistanceToOpt: the exact solution (else equals u)
  struct Row {
    int first = 0;       ///< row of the step QP (first of the pair when merged)
    bool merged = false;  ///< equality pair encoded as one row with a free multiplier
    int s = -1;
    int y = -1;
    int comp = -1;  ///< product s*y pinned to 0
  };
  std::vector<Row> rows;
};

struct RoundHandles {
  std::vector<int> indices;  ///< rounded coordinates
  std::vector<int> bin;      ///< v (binary), b with v = 2b - 1 (+-1) or alpha (sparsity)
  std::vector<int> v;        ///< sparsity output variables
  int t = -1;                ///< sparsity threshold (round_threshold_t)
};

struct StepHandles {
  bool is_round = false;
  QPHandles qp;
  RoundHandles round;
};

struct Layout {
  PerformanceMetric metric = PerformanceMetric::ViolationSquaredL2;
  AlgorithmSchedule schedule;  ///< the encoded schedule
  std::vector<int> x;
  std::vector<int> x_sel;  ///< binary selector of a two-valued coordinate, or -1
  std::vector<StepHandles> steps;
  // Suboptimality.
  std::vector<int> zstar;       ///< z* variable, or -1 when z*_j = 2b - 1
  std::vector<int> zstar_bin;   ///< b for +-1 coordinates, or -1
  std::vector<int> zstar_alpha; ///< sparsity support of z*
  std::vector<int> zstar_pick;  ///< enumerated-optimality candidate selectors
  std::vector<Vec> candidates;
  std::vector<int> absK_p, absK_sigma, abs_star_p;
  // Violation.
  std::vector<int> viol_p, viol_sigma, eq_res;
  // Farkas.
  std::vector<int> farkas_y;
};

struct EncodedProgram {
  VerificationProgram prog;
  Layout layout;
};

/// K: number of iterative steps kept (schedule.truncated(K)); -1 keeps the whole schedule.
EncodedProgram build_program(PerformanceMetric metric, const ParametricProblem& problem,
                             const AlgorithmSchedule& schedule, const ParameterSet& pset,
                             const InexactnessModel& inexact, int K,
                             const EncoderOptions& opt = {});
EncodedProgram build_suboptimality(const ParametricProblem& problem,
                                   const AlgorithmSchedule& schedule, const ParameterSet& pset,
                                   const InexactnessModel& inexact, int K,
                                   const EncoderOptions& opt = {});
EncodedProgram build_violation(const ParametricProblem& problem, const AlgorithmSchedule& schedule,
                               const ParameterSet& pset, const InexactnessModel& inexact, int K,
                               const EncoderOptions& opt = {});
EncodedProgram build_farkas(const ParametricProblem& problem, const AlgorithmSchedule& schedule,
                            const ParameterSet& pset, const InexactnessModel& inexact, int K,
                            const EncoderOptions& opt = {});

/// KKT encoding of one QP step. `u_out` receives the downstream u expressions.
QPHandles encode_qp_step(VerificationProgram& prog, const StepQP<Expr>& qp, const Box& z_bounds,
                         const InexactnessModel& inexact, const std::string& tag, double dual_cap,
                         std::vector<Expr>& u_out);
/// Nearest-point rounding of u onto {0,1} (or {-1,1} when pm1) with ties left free.
RoundHandles encode_binary_round(VerificationProgram& prog, const std::vector<Expr>& u,
                                 const std::vector<int>& indices, bool pm1,
                                 const std::string& tag, std::vector<Expr>& v_out);
/// Keep-k-largest rounding of u given w = |u|.
RoundHandles encode_sparsity_round(VerificationProgram& prog, const std::vector<Expr>& u,
                                   const std::vector<Expr>& w, int k, const std::string& tag,
                                   std::vector<Expr>& v_out, std::vector<Expr>& alpha_out);

/// Full assignment of the program from a forward trace at the trace's parameter. The
/// trace must come from run_schedule on layout.schedule (with stop_on_infeasible = false
/// for the feasibility metric). `zstar` is required for the suboptimality metric.
std::vector<double> witness_from_trace(const EncodedProgram& enc, const ParametricProblem& problem,
                                       const IterateTrace& trace, const Vec* zstar = nullptr);

}  // namespace scpv
