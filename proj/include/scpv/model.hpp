#pragma once

// Parametric non-convex problem, parameter/initial sets and algorithm schedules.

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace scpv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// q(z, x) = 1/2 z'Pz + (Kx + c)'z + r'x + r0.
struct QuadraticForm {
  Mat P;
  Mat K;
  Vec c;
  Vec r;
  double r0 = 0.0;

  static QuadraticForm zero(int n, int d);

  double eval(const Vec& z, const Vec& x) const;
  /// Gradient in z: Pz + Kx + c.
  Vec grad(const Vec& z, const Vec& x) const;
  bool is_affine() const { return P.isZero(0.0); }
  int n() const { return static_cast<int>(c.size()); }
  int d() const { return static_cast<int>(r.size()); }
};

/// weight * |inner(z, x)|, used for composite objectives (prox-linear family).
struct AbsTerm {
  double weight = 1.0;
  QuadraticForm inner;
};

struct BinaryConstraint {
  std::vector<int> indices;
};
struct SparsityConstraint {
  int k = 0;
};
struct PlusMinusOneConstraint {
  std::vector<int> indices;
};
using DiscreteConstraint =
    std::variant<std::monostate, BinaryConstraint, SparsityConstraint, PlusMinusOneConstraint>;

inline bool has_discrete(const DiscreteConstraint& d) {
  return !std::holds_alternative<std::monostate>(d);
}

struct Box {
  Vec lower;
  Vec upper;
  int size() const { return static_cast<int>(lower.size()); }
  bool contains(const Vec& v, double tol = 0.0) const;
  Vec center() const { return 0.5 * (lower + upper); }
};

/// Minimize f(z, x) = objective + sum of abs terms subject to ineq <= 0, eq = 0 and the
/// discrete constraint. `z_bounds` is a box declared to contain every iterate of the
/// algorithms run on the problem as well as its minimizers; the verification programs
/// need it to bound the iterate variables.
struct ParametricProblem {
  int n = 0;
  int d = 0;
  QuadraticForm objective;
  std::vector<AbsTerm> abs_terms;
  std::vector<QuadraticForm> ineq;
  std::vector<QuadraticForm> eq;
  DiscreteConstraint discrete;
  Box z_bounds;
};

struct ParameterSet {
  Vec lower;
  Vec upper;
  /// Coordinates restricted to the two values {lower_j, upper_j}.
  std::vector<int> discrete_coords;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vec& x, double tol = 1e-12) const;
  bool is_discrete(int j) const;
  /// Midpoint, with discrete coordinates snapped to their lower value.
  Vec center() const;
  /// Uniform sample in the box; discrete coordinates pick an endpoint with probability 1/2.
  template <class Rng>
  Vec sample(Rng& rng) const;
};

struct ColdStart {
  Vec point;
};
struct WarmStart {
  Vec point;
};
struct NoInit {};
using InitialSet = std::variant<ColdStart, WarmStart, NoInit>;

std::optional<Vec> initial_point(const InitialSet& s);

struct TrustRegionStep {
  double rho = 1.0;
};
struct PenalizedCCPStep {
  double tau = 1.0;
};
struct ProxLinearStep {
  double rho = 1.0;
};
struct RelaxStep {
  double lambda = 0.0;
};
/// Projects the discrete block onto the problem's discrete set.
struct RoundStep {};
/// Re-solves for the continuous variables with the discrete block fixed.
struct PolishStep {};
using StepSpec = std::variant<TrustRegionStep, PenalizedCCPStep, ProxLinearStep, RelaxStep,
                              RoundStep, PolishStep>;

std::string step_name(const StepSpec& s);
bool is_qp_step(const StepSpec& s);

struct AlgorithmSchedule {
  std::vector<StepSpec> steps;
  InitialSet init = NoInit{};

  int K() const { return static_cast<int>(steps.size()); }
  /// Number of leading steps before the trailing Round/Polish tail.
  int iterative_count() const;
  /// First `k` iterative steps followed by the unchanged Round/Polish tail.
  AlgorithmSchedule truncated(int k) const;
};

enum class PerformanceMetric { Suboptimality, ViolationSquaredL2, SubproblemFeasibility };

std::string metric_name(PerformanceMetric m);
PerformanceMetric parse_metric(const std::string& s);

struct ValidationReport {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

ValidationReport validate(const ParametricProblem& problem, const AlgorithmSchedule& schedule,
                          const ParameterSet& pset);

double eval_objective(const ParametricProblem& problem, const Vec& z, const Vec& x);
/// Sum of squared positive parts of the inequalities plus squared equality residuals.
double eval_violation(const ParametricProblem& problem, const Vec& z, const Vec& x);
bool satisfies_discrete(const ParametricProblem& problem, const Vec& z, double tol = 0.0);

/// Problem with the parameter folded into constants.
struct FixedQuadratic {
  Mat P;
  Vec q;
  double r = 0.0;
  double eval(const Vec& z) const { return 0.5 * z.dot(P * z) + q.dot(z) + r; }
};

struct FixedProblem {
  int n = 0;
  FixedQuadratic objective;
  std::vector<std::pair<double, FixedQuadratic>> abs_terms;
  std::vector<FixedQuadratic> ineq;
  std::vector<FixedQuadratic> eq;
  DiscreteConstraint discrete;
  Box z_bounds;

  double eval_objective(const Vec& z) const;
  double eval_violation(const Vec& z) const;
};

FixedProblem substitute_parameter(const ParametricProblem& problem, const Vec& x,
                                  const ParameterSet* pset = nullptr);
FixedQuadratic substitute(const QuadraticForm& q, const Vec& x);

/// P = P+ - P- with both parts PSD (eigenvalue split).
struct DCSplit {
  Mat pos;
  Mat neg;
};
DCSplit dc_split(const Mat& P);

/// Indices covered by the discrete constraint (all of z for sparsity).
std::vector<int> discrete_indices(const ParametricProblem& problem);

// ---------------------------------------------------------------------------

template <class Rng>
Vec ParameterSet::sample(Rng& rng) const {
  Vec x(dim());
  for (int j = 0; j < dim(); ++j) {
    // 53-bit uniform in [0,1) without relying on distribution implementations.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (is_discrete(j))
      x(j) = u < 0.5 ? lower(j) : upper(j);
    else
      x(j) = lower(j) + u * (upper(j) - lower(j));
  }
  return x;
}

}  // namespace scpv
