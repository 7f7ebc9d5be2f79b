#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "scpv/model.hpp"

#include <random>

using namespace scpv;

namespace {

Mat sym_random(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = N(rng);
  return 0.5 * (A + A.transpose());
}

QuadraticForm random_form(int n, int d, std::mt19937_64& rng, bool affine = false) {
  std::normal_distribution<double> N;
  QuadraticForm q = QuadraticForm::zero(n, d);
  if (!affine) q.P = sym_random(n, rng);
  for (int i = 0; i < n; ++i) {
    q.c(i) = N(rng);
    for (int j = 0; j < d; ++j) q.K(i, j) = N(rng);
  }
  for (int j = 0; j < d; ++j) q.r(j) = N(rng);
  q.r0 = N(rng);
  return q;
}

ParametricProblem simple_problem() {
  ParametricProblem p;
  p.n = 2;
  p.d = 2;
  p.objective = QuadraticForm::zero(2, 2);
  p.objective.P = Mat::Identity(2, 2);
  p.objective.K = Mat::Identity(2, 2);
  p.z_bounds = Box{Vec::Constant(2, -5), Vec::Constant(2, 5)};
  return p;
}

}  // namespace

TEST_CASE("parameter substitution folds the linear cost") {
  ParametricProblem p = simple_problem();
  p.objective.P.setZero();
  Vec x(2);
  x << 1, 2;
  const FixedProblem f = substitute_parameter(p, x);
  CHECK(f.objective.q(0) == 1.0);
  CHECK(f.objective.q(1) == 2.0);
}

TEST_CASE("folded evaluation equals parametric evaluation") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N;
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 5, d = 1 + t % 3;
    ParametricProblem p;
    p.n = n;
    p.d = d;
    p.objective = random_form(n, d, rng);
    p.ineq = {random_form(n, d, rng), random_form(n, d, rng, true)};
    p.eq = {random_form(n, d, rng, true)};
    p.z_bounds = Box{Vec::Constant(n, -3), Vec::Constant(n, 3)};
    Vec z(n), x(d);
    for (int i = 0; i < n; ++i) z(i) = N(rng);
    for (int j = 0; j < d; ++j) x(j) = N(rng);
    const FixedProblem f = substitute_parameter(p, x);
    const double a = eval_objective(p, z, x), b = f.eval_objective(z);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
    const double va = eval_violation(p, z, x), vb = f.eval_violation(z);
    CHECK(std::abs(va - vb) <= 1e-12 * std::max(1.0, std::abs(va)));
  }
}

TEST_CASE("violation sums squared positive parts and squared residuals") {
  ParametricProblem p = simple_problem();
  QuadraticForm g = QuadraticForm::zero(2, 2);
  g.c << 1, 0;  // z0 <= 0
  QuadraticForm h = QuadraticForm::zero(2, 2);
  h.c << 0, 1;
  h.r0 = -1;  // z1 = 1
  p.ineq = {g};
  p.eq = {h};
  Vec z(2), x = Vec::Zero(2);
  z << 2, 3;
  CHECK(eval_violation(p, z, x) == doctest::Approx(4.0 + 4.0));
  z << -1, 1;
  CHECK(eval_violation(p, z, x) == 0.0);
}

TEST_CASE("validate reports problems without side effects") {
  ParametricProblem p = simple_problem();
  AlgorithmSchedule s{{TrustRegionStep{0.5}}, ColdStart{Vec::Zero(2)}};
  ParameterSet X{Vec::Zero(2), Vec::Ones(2), {}};
  CHECK(validate(p, s, X).ok());
  p.objective.P(0, 1) = 1.0;  // asymmetric
  const auto r1 = validate(p, s, X), r2 = validate(p, s, X);
  CHECK_FALSE(r1.ok());
  CHECK(r1.issues == r2.issues);
  p = simple_problem();
  AlgorithmSchedule bad{{RoundStep{}}, NoInit{}};
  CHECK_FALSE(validate(p, bad, X).ok());
  ParameterSet wrong{Vec::Zero(3), Vec::Ones(3), {}};
  CHECK_FALSE(validate(p, s, wrong).ok());
  AlgorithmSchedule neg{{TrustRegionStep{-1}}, ColdStart{Vec::Zero(2)}};
  CHECK_FALSE(validate(p, neg, X).ok());
}

TEST_CASE("parameter set sampling and center") {
  ParameterSet X{Vec::Constant(2, 2.0), Vec::Constant(2, 4.0), {1}};
  CHECK(X.center()(0) == 3.0);
  CHECK(X.center()(1) == 2.0);
  std::mt19937_64 a(9), b(9);
  for (int i = 0; i < 100; ++i) {
    const Vec u = X.sample(a), v = X.sample(b);
    CHECK(u == v);
    CHECK(X.contains(u));
    CHECK((u(1) == 2.0 || u(1) == 4.0));
  }
}

TEST_CASE("dc split reassembles P with PSD parts") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const Mat P = sym_random(1 + t % 6, rng);
    const DCSplit s = dc_split(P);
    CHECK((s.pos - s.neg - P).norm() <= 1e-10 * (1 + P.norm()));
    Eigen::SelfAdjointEigenSolver<Mat> e1(s.pos), e2(s.neg);
    CHECK(e1.eigenvalues().minCoeff() >= -1e-10);
    CHECK(e2.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("schedule truncation keeps the rounding tail") {
  AlgorithmSchedule s{{RelaxStep{0.0}, RelaxStep{0.0}, RoundStep{}, PolishStep{}}, NoInit{}};
  CHECK(s.iterative_count() == 2);
  const auto t = s.truncated(1);
  REQUIRE(t.K() == 3);
  CHECK(std::holds_alternative<RelaxStep>(t.steps[0]));
  CHECK(std::holds_alternative<RoundStep>(t.steps[1]));
  CHECK(std::holds_alternative<PolishStep>(t.steps[2]));
}

TEST_CASE("binary membership is exact") {
  ParametricProblem p = simple_problem();
  p.discrete = BinaryConstraint{{0, 1}};
  Vec z(2);
  z << 0, 1;
  CHECK(satisfies_discrete(p, z));
  z << 0, 1 - 1e-16;
  CHECK_FALSE(satisfies_discrete(p, z));
  p.discrete = SparsityConstraint{1};
  z << 0, 3;
  CHECK(satisfies_discrete(p, z));
  z << 1e-300, 3;
  CHECK_FALSE(satisfies_discrete(p, z));
}

TEST_CASE("metric names round trip") {
  for (auto m : {PerformanceMetric::Suboptimality, PerformanceMetric::ViolationSquaredL2,
                 PerformanceMetric::SubproblemFeasibility})
    CHECK(parse_metric(metric_name(m)) == m);
  CHECK_THROWS(parse_metric("nonsense"));
}
