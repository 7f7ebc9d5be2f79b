#pragma once

// Spatial branch-and-bound for VerificationProgram (maximization). Relaxation: McCormick
// envelopes for products, secant/tangents for squares, big-M rows for implications.

#include "scpv/encoder.hpp"
#include "scpv/program.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace scpv {

struct Bounds {
  std::vector<double> lo;
  std::vector<double> hi;

  static Bounds of(const VerificationProgram& prog);
  int size() const { return static_cast<int>(lo.size()); }
  double width(int i) const { return hi[i] - lo[i]; }
};

/// Feasibility-based bound tightening. Returns false when the box is proven empty.
bool interval_propagate(const VerificationProgram& prog, Bounds& b, int max_rounds = 12);

/// LP relaxation over the program variables (products included) on the box. The LP
/// minimizes the negated objective, so -value is an upper bound on the program.
LinearProgram relax(const VerificationProgram& prog, const Bounds& b);

struct BranchDecision {
  enum Kind { None, Binary, Complementarity, Spatial } kind = None;
  int var = -1;
  int other = -1;        ///< second operand (complementarity)
  double split = 0.0;    ///< spatial split point
  bool up_first = true;  ///< child to explore first
};

/// Priority: fractional binary, then violated complementarity, then violated product.
BranchDecision choose_branch(const VerificationProgram& prog, const Bounds& b,
                             const std::vector<double>& point, double tol = 1e-7);
/// (first child, second child) for a decision.
std::pair<Bounds, Bounds> branch(const Bounds& b, const BranchDecision& d);

enum class GlobalStatus { Converged, GapReached, TimeLimit, NodeLimit, Infeasible };
std::string to_string(GlobalStatus s);

/// Proposes a full assignment from a relaxation point; checked before acceptance.
using IncumbentCallback = std::function<std::optional<std::vector<double>>(
    const std::vector<double>& point, const Bounds& node, bool root)>;

struct GlobalOptions {
  double rel_gap = 1e-4;
  double abs_gap = 1e-9;
  double time_limit = 60.0;
  long node_limit = 2000000;
  double feas_tol = 1e-6;
  bool obbt = false;
  int callback_every = 10;
  IncumbentCallback callback;
  /// Initial bounds by variable name, intersected with the declared bounds.
  std::map<std::string, std::pair<double, double>> initial_bounds;
  std::ostream* log = nullptr;
  int log_every = 100;
};

struct GlobalResult {
  GlobalStatus status = GlobalStatus::Infeasible;
  double best_value = -kInf;  ///< incumbent objective (lower bound on the maximum)
  double upper_bound = kInf;  ///< proven upper bound on the maximum
  double gap = kInf;          ///< (upper - best) / max(1, |best|)
  std::vector<double> witness;
  long nodes = 0;
  double seconds = 0.0;
  bool dual_cap_active = false;
  /// Root bounds after propagation (and OBBT when enabled).
  Bounds root;
  bool has_incumbent() const { return !witness.empty(); }
};

GlobalResult solve_global(const VerificationProgram& prog, const GlobalOptions& opt = {});

struct ObbtOptions {
  /// Roles whose bounds are tightened; Param is left alone.
  std::vector<VarRole> roles{VarRole::Dual, VarRole::Product, VarRole::Iterate, VarRole::Primal,
                             VarRole::Slack};
  double time_limit = 30.0;
  int rebuild_every = 8;
};

/// Counts compare the result with the bounds passed in (propagation included).
struct ObbtStats {
  int solved = 0;
  int tightened = 0;
  int duals_tightened = 0;
};

/// One pass of optimization-based bound tightening on the root relaxation. The result
/// contains every feasible point of the program.
Bounds obbt_pass(const VerificationProgram& prog, const Bounds& b, const ObbtOptions& opt = {},
                 ObbtStats* stats = nullptr);

/// Forward-simulation incumbents: the x part of the relaxation point is run through the
/// encoded schedule and lifted into a witness. At the root, the box corners (up to 2^6)
/// and the center are tried as well.
IncumbentCallback forward_incumbent(const EncodedProgram& enc, const ParametricProblem& problem,
                                    const ParameterSet& pset, const OracleOptions& oracle = {});

struct SequentialResult {
  int K = 0;
  GlobalResult result;
};

/// Verifies K = 0..K_max (1..K_max when the first iterate is not fixed); root bounds of
/// shared variables found at K seed the program at K+1.
std::vector<SequentialResult> verify_sequential(PerformanceMetric metric,
                                                const ParametricProblem& problem,
                                                const AlgorithmSchedule& schedule,
                                                const ParameterSet& pset,
                                                const InexactnessModel& inexact, int K_max,
                                                const EncoderOptions& enc_opt,
                                                const GlobalOptions& opt);

}  // namespace scpv
