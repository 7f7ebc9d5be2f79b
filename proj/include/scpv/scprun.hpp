#pragma once

// Forward execution of algorithm schedules and the sample-maximum baseline.

#include "scpv/model.hpp"
#include "scpv/oracle.hpp"
#include "scpv/qp.hpp"
#include "scpv/steps.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scpv {

struct StepArtifacts {
  StepSpec spec;
  bool is_round = false;
  StepQP<double> step_qp;  ///< QP steps only
  StandardQP qp;
  QPSolution solution;
  RoundResult round;  ///< Round steps only
};

struct IterateTrace {
  Vec x;
  /// z^0 ... z^K, or z^1 ... z^K when there is no initial point.
  std::vector<Vec> iterates;
  bool has_initial = true;
  /// Full iterate states (with |z| and support), aligned with iterates.
  std::vector<IterState<double>> states;
  std::vector<StepArtifacts> steps;
  std::vector<double> objective;
  std::vector<double> violation;
  /// Index of a step whose QP was infeasible (only when RunOptions::stop_on_infeasible is
  /// false); the trace then ends with that step's artifacts.
  int infeasible_step = -1;
};

struct StepInfeasible : std::runtime_error {
  int iteration;
  StepInfeasible(int it, const std::string& what) : std::runtime_error(what), iteration(it) {}
};

struct SolverFailure : std::runtime_error {
  int iteration;
  SolverFailure(int it, const std::string& what) : std::runtime_error(what), iteration(it) {}
};

struct RunOptions {
  double tol = 1e-9;
  int max_iter = 200000;
  bool stop_on_infeasible = true;
};

/// One step from `in` at parameter x.
std::pair<IterState<double>, StepArtifacts> apply_step(const StepSpec& spec,
                                                       const ParametricProblem& problem,
                                                       const IterState<double>& in, const Vec& x,
                                                       const RunOptions& opt = {});
std::pair<Vec, StepArtifacts> apply_step(const StepSpec& spec, const ParametricProblem& problem,
                                         const Vec& z_k, const Vec& x, const RunOptions& opt = {});

IterateTrace run_schedule(const ParametricProblem& problem, const AlgorithmSchedule& schedule,
                          const Vec& x, const RunOptions& opt = {});

struct SampleMaxReport {
  int num_samples = 0;
  std::uint64_t seed = 0;
  PerformanceMetric metric = PerformanceMetric::ViolationSquaredL2;
  /// Entry k is the max over samples of the metric at the k-th recorded iterate (the
  /// single final value for SubproblemFeasibility).
  std::vector<double> max_per_iter;
  int first_iteration = 0;  ///< iteration number of max_per_iter[0]
  std::vector<Vec> argmax;
  std::vector<int> failed_samples;
  std::vector<std::string> failures;
};

struct SampleOptions {
  RunOptions run;
  OracleOptions oracle;
  int threads = 0;  ///< 0: SCPVERIFY_THREADS or hardware concurrency
};

/// Metric values along a trace. Suboptimality needs the optimal value f*(x).
std::vector<double> trace_metric(const ParametricProblem& problem, const IterateTrace& trace,
                                 PerformanceMetric metric, double fstar = 0.0);

/// max over normalized certificates of -b'y for the system A u <= b (0 when feasible).
double farkas_value(const StandardQP& qp);

SampleMaxReport sample_maximum(const ParametricProblem& problem, const AlgorithmSchedule& schedule,
                               const ParameterSet& pset, PerformanceMetric metric, int num_samples,
                               std::uint64_t seed, const SampleOptions& opt = {});

/// Worker count from SCPVERIFY_THREADS (capped at the hardware concurrency).
int worker_count(int requested = 0);

std::string trace_csv(const IterateTrace& trace);
std::string report_csv(const SampleMaxReport& report);

}  // namespace scpv
