#include "scpv/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace scpv {

QuadraticForm QuadraticForm::zero(int n, int d) {
  QuadraticForm q;
  q.P = Mat::Zero(n, n);
  q.K = Mat::Zero(n, d);
  q.c = Vec::Zero(n);
  q.r = Vec::Zero(d);
  q.r0 = 0.0;
  return q;
}

double QuadraticForm::eval(const Vec& z, const Vec& x) const {
  if (z.size() != c.size() || x.size() != r.size())
    throw DimensionError("quadratic form: dimension mismatch");
  return 0.5 * z.dot(P * z) + (K * x + c).dot(z) + r.dot(x) + r0;
}

Vec QuadraticForm::grad(const Vec& z, const Vec& x) const {
  if (z.size() != c.size() || x.size() != r.size())
    throw DimensionError("quadratic form: dimension mismatch");
  return P * z + K * x + c;
}

bool Box::contains(const Vec& v, double tol) const {
  if (v.size() != lower.size()) return false;
  for (int i = 0; i < v.size(); ++i)
    if (v(i) < lower(i) - tol || v(i) > upper(i) + tol) return false;
  return true;
}

bool ParameterSet::contains(const Vec& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (int j = 0; j < x.size(); ++j) {
    if (x(j) < lower(j) - tol || x(j) > upper(j) + tol) return false;
    if (is_discrete(j) && std::abs(x(j) - lower(j)) > tol && std::abs(x(j) - upper(j)) > tol)
      return false;
  }
  return true;
}

bool ParameterSet::is_discrete(int j) const {
  return std::find(discrete_coords.begin(), discrete_coords.end(), j) != discrete_coords.end();
}

Vec ParameterSet::center() const {
  Vec x = 0.5 * (lower + upper);
  for (int j : discrete_coords) x(j) = lower(j);
  return x;
}

std::optional<Vec> initial_point(const InitialSet& s) {
  if (auto* c = std::get_if<ColdStart>(&s)) return c->point;
  if (auto* w = std::get_if<WarmStart>(&s)) return w->point;
  return std::nullopt;
}

std::string step_name(const StepSpec& s) {
  struct V {
    std::string operator()(const TrustRegionStep&) const { return "trust_region"; }
    std::string operator()(const PenalizedCCPStep&) const { return "penalized_ccp"; }
    std::string operator()(const ProxLinearStep&) const { return "prox_linear"; }
    std::string operator()(const RelaxStep&) const { return "relax"; }
    std::string operator()(const RoundStep&) const { return "round"; }
    std::string operator()(const PolishStep&) const { return "polish"; }
  };
  return std::visit(V{}, s);
}

bool is_qp_step(const StepSpec& s) { return !std::holds_alternative<RoundStep>(s); }

int AlgorithmSchedule::iterative_count() const {
  int k = K();
  while (k > 0 && (std::holds_alternative<RoundStep>(steps[k - 1]) ||
                   std::holds_alternative<PolishStep>(steps[k - 1])))
    --k;
  return k;
}

AlgorithmSchedule AlgorithmSchedule::truncated(int k) const {
  const int it = iterative_count();
  if (k < 0 || k > it) throw std::out_of_range("schedule truncation beyond iterative steps");
  AlgorithmSchedule out;
  out.init = init;
  out.steps.assign(steps.begin(), steps.begin() + k);
  out.steps.insert(out.steps.end(), steps.begin() + it, steps.end());
  return out;
}

std::string metric_name(PerformanceMetric m) {
  switch (m) {
    case PerformanceMetric::Suboptimality: return "subopt";
    case PerformanceMetric::ViolationSquaredL2: return "violation";
    case PerformanceMetric::SubproblemFeasibility: return "farkas";
  }
  return "?";
}

PerformanceMetric parse_metric(const std::string& s) {
  if (s == "subopt" || s == "suboptimality") return PerformanceMetric::Suboptimality;
  if (s == "violation") return PerformanceMetric::ViolationSquaredL2;
  if (s == "farkas" || s == "feasibility") return PerformanceMetric::SubproblemFeasibility;
  throw std::invalid_argument("unknown metric: " + s);
}

namespace {

void check_form(const QuadraticForm& q, int n, int d, const std::string& what,
                std::vector<std::string>& issues) {
  if (q.P.rows() != n || q.P.cols() != n || q.K.rows() != n || q.K.cols() != d ||
      q.c.size() != n || q.r.size() != d) {
    issues.push_back(what + ": dimensions do not match (n, d)");
    return;
  }
  if (!(q.P - q.P.transpose()).isZero(0.0)) issues.push_back(what + ": P is not symmetric");
}

bool is_psd(const Mat& P) {
  if (P.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  return es.eigenvalues().minCoeff() >= -1e-8;
}

bool is_nsd_or_zero(const Mat& P) {
  if (P.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  return es.eigenvalues().maxCoeff() <= 1e-8;
}

}  // namespace

ValidationReport validate(const ParametricProblem& problem, const AlgorithmSchedule& schedule,
                          const ParameterSet& pset) {
  ValidationReport rep;
  auto& issues = rep.issues;
  const int n = problem.n, d = problem.d;
  if (n < 0 || d < 0) issues.push_back("negative dimension");
  check_form(problem.objective, n, d, "objective", issues);
  for (size_t i = 0; i < problem.ineq.size(); ++i)
    check_form(problem.ineq[i], n, d, "ineq[" + std::to_string(i) + "]", issues);
  for (size_t i = 0; i < problem.eq.size(); ++i) {
    check_form(problem.eq[i], n, d, "eq[" + std::to_string(i) + "]", issues);
    if (problem.eq[i].P.size() && !problem.eq[i].is_affine())
      issues.push_back("eq[" + std::to_string(i) + "]: equality constraints must be affine");
  }
  for (size_t i = 0; i < problem.abs_terms.size(); ++i)
    check_form(problem.abs_terms[i].inner, n, d, "abs[" + std::to_string(i) + "]", issues);

  if (auto* s = std::get_if<SparsityConstraint>(&problem.discrete)) {
    if (s->k < 0 || s->k > n) issues.push_back("sparsity level k must satisfy 0 <= k <= n");
  }
  auto check_idx = [&](const std::vector<int>& idx) {
    for (int i : idx)
      if (i < 0 || i >= n) issues.push_back("discrete index out of range");
  };
  if (auto* b = std::get_if<BinaryConstraint>(&problem.discrete)) check_idx(b->indices);
  if (auto* b = std::get_if<PlusMinusOneConstraint>(&problem.discrete)) check_idx(b->indices);

  if (problem.z_bounds.lower.size() != n || problem.z_bounds.upper.size() != n) {
    issues.push_back("z_bounds: dimension does not match n");
  } else {
    for (int i = 0; i < n; ++i) {
      if (!(problem.z_bounds.lower(i) <= problem.z_bounds.upper(i)))
        issues.push_back("z_bounds: lower > upper at " + std::to_string(i));
      if (!std::isfinite(problem.z_bounds.lower(i)) || !std::isfinite(problem.z_bounds.upper(i)))
        issues.push_back("z_bounds: must be finite");
    }
  }

  if (pset.lower.size() != d || pset.upper.size() != d) {
    issues.push_back("parameter set: dimension does not match d");
  } else {
    for (int j = 0; j < d; ++j)
      if (!(pset.lower(j) <= pset.upper(j)))
        issues.push_back("parameter set: lower > upper at coordinate " + std::to_string(j));
    for (int j : pset.discrete_coords)
      if (j < 0 || j >= d) issues.push_back("parameter set: discrete coordinate out of range");
  }

  if (auto p = initial_point(schedule.init)) {
    if (p->size() != n) issues.push_back("initial point: dimension does not match n");
  } else if (!schedule.steps.empty() && !std::holds_alternative<RelaxStep>(schedule.steps[0])) {
    issues.push_back("initial set None is only admissible when the schedule starts with relax");
  }

  // Ordering: Round follows a continuous-valued step (or the initial point); Polish follows Round.
  for (int k = 0; k < schedule.K(); ++k) {
    const auto& st = schedule.steps[k];
    if (std::holds_alternative<RoundStep>(st)) {
      if (!has_discrete(problem.discrete))
        issues.push_back("step " + std::to_string(k) + ": round needs a discrete constraint");
      if (k > 0 && (std::holds_alternative<RoundStep>(schedule.steps[k - 1]) ||
                    std::holds_alternative<PolishStep>(schedule.steps[k - 1])))
        issues.push_back("step " + std::to_string(k) + ": round must follow a continuous step");
    }
    if (std::holds_alternative<PolishStep>(st)) {
      if (k == 0 || !std::holds_alternative<RoundStep>(schedule.steps[k - 1]))
        issues.push_back("step " + std::to_string(k) + ": polish must follow round");
    }
    if (auto* t = std::get_if<TrustRegionStep>(&st); t && !(t->rho > 0))
      issues.push_back("step " + std::to_string(k) + ": trust-region radius must be > 0");
    if (auto* t = std::get_if<PenalizedCCPStep>(&st); t && !(t->tau > 0))
      issues.push_back("step " + std::to_string(k) + ": penalty weight must be > 0");
    if (auto* t = std::get_if<ProxLinearStep>(&st); t && !(t->rho > 0))
      issues.push_back("step " + std::to_string(k) + ": prox-linear rho must be > 0");
    if (auto* t = std::get_if<RelaxStep>(&st)) {
      if (t->lambda < 0) issues.push_back("step " + std::to_string(k) + ": lambda must be >= 0");
      if (std::holds_alternative<SparsityConstraint>(problem.discrete) && !(t->lambda > 0))
        issues.push_back("step " + std::to_string(k) + ": sparsity relax needs lambda > 0");
    }
  }

  // Convexity requirements that keep every step a QP with linear constraints.
  if (rep.issues.empty()) {
    bool any_tr_ccp = false, any_relax = false, any_prox = false;
    for (const auto& st : schedule.steps) {
      any_tr_ccp |= std::holds_alternative<TrustRegionStep>(st) ||
                    std::holds_alternative<PenalizedCCPStep>(st);
      any_prox |= std::holds_alternative<ProxLinearStep>(st);
      any_relax |= std::holds_alternative<RelaxStep>(st) || std::holds_alternative<PolishStep>(st);
    }
    if (any_tr_ccp) {
      for (size_t i = 0; i < problem.ineq.size(); ++i)
        if (!is_nsd_or_zero(problem.ineq[i].P))
          issues.push_back("ineq[" + std::to_string(i) +
                           "]: convex quadratic constraints are not supported by linearizing steps");
      if (!problem.abs_terms.empty())
        issues.push_back("abs terms are only supported by prox-linear schedules");
    }
    if (any_prox || any_relax) {
      if (!is_psd(problem.objective.P))
        issues.push_back("objective must be convex for prox-linear/relax/polish steps");
      for (size_t i = 0; i < problem.ineq.size(); ++i)
        if (!problem.ineq[i].is_affine())
          issues.push_back("ineq[" + std::to_string(i) + "]: must be affine for this schedule");
    }
    if (any_relax && !problem.abs_terms.empty())
      issues.push_back("abs terms are not supported by relax-round-polish schedules");
  }
  return rep;
}

double eval_objective(const ParametricProblem& problem, const Vec& z, const Vec& x) {
  if (z.size() != problem.n || x.size() != problem.d)
    throw DimensionError("eval_objective: dimension mismatch");
  double v = problem.objective.eval(z, x);
  for (const auto& a : problem.abs_terms) v += a.weight * std::abs(a.inner.eval(z, x));
  return v;
}

double eval_violation(const ParametricProblem& problem, const Vec& z, const Vec& x) {
  if (z.size() != problem.n || x.size() != problem.d)
    throw DimensionError("eval_violation: dimension mismatch");
  double v = 0.0;
  for (const auto& g : problem.ineq) {
    const double gi = std::max(g.eval(z, x), 0.0);
    v += gi * gi;
  }
  for (const auto& h : problem.eq) {
    const double hi = h.eval(z, x);
    v += hi * hi;
  }
  return v;
}

bool satisfies_discrete(const ParametricProblem& problem, const Vec& z, double tol) {
  if (auto* b = std::get_if<BinaryConstraint>(&problem.discrete)) {
    for (int i : b->indices)
      if (std::abs(z(i)) > tol && std::abs(z(i) - 1.0) > tol) return false;
  } else if (auto* p = std::get_if<PlusMinusOneConstraint>(&problem.discrete)) {
    for (int i : p->indices)
      if (std::abs(z(i) + 1.0) > tol && std::abs(z(i) - 1.0) > tol) return false;
  } else if (auto* s = std::get_if<SparsityConstraint>(&problem.discrete)) {
    int nnz = 0;
    for (int i = 0; i < z.size(); ++i) nnz += std::abs(z(i)) > tol;
    if (nnz > s->k) return false;
  }
  return true;
}

FixedQuadratic substitute(const QuadraticForm& q, const Vec& x) {
  if (x.size() != q.r.size()) throw DimensionError("substitute: dimension mismatch");
  return FixedQuadratic{q.P, q.K * x + q.c, q.r.dot(x) + q.r0};
}

FixedProblem substitute_parameter(const ParametricProblem& problem, const Vec& x,
                                  const ParameterSet* pset) {
  if (x.size() != problem.d) throw DimensionError("substitute_parameter: dimension mismatch");
  (void)pset;  // Out-of-set parameters are admissible here; callers decide whether to warn.
  FixedProblem fp;
  fp.n = problem.n;
  fp.objective = substitute(problem.objective, x);
  for (const auto& a : problem.abs_terms) fp.abs_terms.emplace_back(a.weight, substitute(a.inner, x));
  for (const auto& g : problem.ineq) fp.ineq.push_back(substitute(g, x));
  for (const auto& h : problem.eq) fp.eq.push_back(substitute(h, x));
  fp.discrete = problem.discrete;
  fp.z_bounds = problem.z_bounds;
  return fp;
}

double FixedProblem::eval_objective(const Vec& z) const {
  double v = objective.eval(z);
  for (const auto& [w, q] : abs_terms) v += w * std::abs(q.eval(z));
  return v;
}

double FixedProblem::eval_violation(const Vec& z) const {
  double v = 0.0;
  for (const auto& g : ineq) {
    const double gi = std::max(g.eval(z), 0.0);
    v += gi * gi;
  }
  for (const auto& h : eq) {
    const double hi = h.eval(z);
    v += hi * hi;
  }
  return v;
}

DCSplit dc_split(const Mat& P) {
  const int n = static_cast<int>(P.rows());
  DCSplit s{Mat::Zero(n, n), Mat::Zero(n, n)};
  if (n == 0 || P.isZero(0.0)) return s;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (P + P.transpose()));
  const Vec& ev = es.eigenvalues();
  const Mat& V = es.eigenvectors();
  // Diagonal-only matrices split exactly without round-off from the eigenvectors.
  if (P.isDiagonal(0.0)) {
    for (int i = 0; i < n; ++i) {
      if (P(i, i) > 0) s.pos(i, i) = P(i, i);
      else s.neg(i, i) = -P(i, i);
    }
    return s;
  }
  for (int i = 0; i < n; ++i) {
    const Vec v = V.col(i);
    if (ev(i) > 0) s.pos += ev(i) * v * v.transpose();
    else if (ev(i) < 0) s.neg -= ev(i) * v * v.transpose();
  }
  s.pos = 0.5 * (s.pos + s.pos.transpose());
  s.neg = 0.5 * (s.neg + s.neg.transpose());
  return s;
}

std::vector<int> discrete_indices(const ParametricProblem& problem) {
  if (auto* b = std::get_if<BinaryConstraint>(&problem.discrete)) return b->indices;
  if (auto* p = std::get_if<PlusMinusOneConstraint>(&problem.discrete)) return p->indices;
  if (std::holds_alternative<SparsityConstraint>(problem.discrete)) {
    std::vector<int> all(problem.n);
    for (int i = 0; i < problem.n; ++i) all[i] = i;
    return all;
  }
  return {};
}

}  // namespace scpv
