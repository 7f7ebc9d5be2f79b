#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "scpv/families.hpp"
#include "scpv/oracle.hpp"
#include "scpv/scprun.hpp"

#include <random>

using namespace scpv;

TEST_CASE("every family generates a valid instance") {
  CHECK(family_ids().size() == 7);
  for (const auto& f : family_ids()) {
    CAPTURE(f);
    FamilyConfig cfg;
    cfg.family = f;
    const FamilyInstance fi = generate(cfg);
    CHECK(validate(fi.problem, fi.schedule, fi.pset).ok());
    CHECK(fi.problem.z_bounds.size() == fi.problem.n);
    // Forward runs stay inside the declared iterate box.
    std::mt19937_64 rng(2);
    RunOptions ro;
    ro.stop_on_infeasible = false;
    for (int s = 0; s < 5; ++s) {
      const IterateTrace tr = run_schedule(fi.problem, fi.schedule, fi.pset.sample(rng), ro);
      for (const auto& z : tr.iterates) CHECK(fi.problem.z_bounds.contains(z, 1e-7));
    }
  }
}

TEST_CASE("unknown family and constants are rejected") {
  FamilyConfig cfg;
  cfg.family = "nope";
  CHECK_THROWS_AS(generate(cfg), UnknownFamily);
  cfg.family = "box_qp";
  cfg.constants["kappa"] = 2.0;
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  cfg.constants = {{"rho", -1.0}};
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
}

TEST_CASE("generation is reproducible from the seed") {
  for (const std::string f : {"box_qp", "knapsack", "sparse_coding", "phase_retrieval"}) {
    CAPTURE(f);
    FamilyConfig cfg;
    cfg.family = f;
    cfg.seed = 17;
    const auto a = generate(cfg), b = generate(cfg);
    CHECK(a.problem.objective.P == b.problem.objective.P);
    CHECK(a.problem.objective.K == b.problem.objective.K);
    CHECK(a.problem.objective.c == b.problem.objective.c);
    cfg.seed = 18;
    const auto c = generate(cfg);
    const bool differs = a.problem.objective.P != c.problem.objective.P ||
                         a.problem.objective.K != c.problem.objective.K ||
                         a.problem.objective.c != c.problem.objective.c ||
                         (!a.problem.ineq.empty() && a.problem.ineq[0].c != c.problem.ineq[0].c) ||
                         (!a.problem.abs_terms.empty() &&
                          a.problem.abs_terms[0].inner.P != c.problem.abs_terms[0].inner.P);
    CHECK(differs);
  }
}

TEST_CASE("power converter condensation matches simulation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int T : {1, 3, 5}) {
    FamilyConfig cfg;
    cfg.family = "power_converter";
    cfg.T = T;
    cfg.warm_start = false;
    const auto fi = generate(cfg);
    const Mat M = power_converter_dropped_quadratic(T);
    for (int s = 0; s < 20; ++s) {
      Vec x(4), u(T);
      for (int i = 0; i < 4; ++i) x(i) = U(rng);
      for (int t = 0; t < T; ++t) u(t) = U(rng) / 2;
      const double sim = power_converter_simulated_cost(x, u);
      const double cond = eval_objective(fi.problem, u, x) + 0.5 * x.dot(M * x);
      CHECK(std::abs(sim - cond) <= 1e-10 * std::max(1.0, std::abs(sim)));
    }
  }
}

TEST_CASE("sparse coding dictionary has unit columns") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    FamilyConfig cfg;
    cfg.family = "sparse_coding";
    cfg.seed = seed;
    const auto fi = generate(cfg);
    // P = A'A, so its diagonal holds the squared column norms.
    for (int j = 0; j < fi.problem.n; ++j) CHECK(fi.problem.objective.P(j, j) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("knapsack weights are positive and the schedule grows geometrically") {
  FamilyConfig cfg;
  cfg.family = "knapsack";
  cfg.n = 5;
  cfg.K = 4;
  cfg.constants = {{"tau0", 0.5}, {"kappa", 3.0}};
  const auto fi = generate(cfg);
  const auto& cap = fi.problem.ineq[0];
  for (int j = 0; j < 5; ++j) CHECK(cap.c(j) > 0.0);
  CHECK(-cap.r0 == doctest::Approx(0.5 * cap.c.sum()));
  REQUIRE(fi.schedule.K() == 4);
  double tau = 0.5;
  for (const auto& s : fi.schedule.steps) {
    CHECK(std::get<PenalizedCCPStep>(s).tau == doctest::Approx(tau));
    tau *= 3.0;
  }
}

TEST_CASE("hybrid vehicle parameter box follows the load constants") {
  FamilyConfig cfg;
  cfg.family = "hybrid_vehicle";
  cfg.constants = {{"p_lb", 0.1}, {"p_ub", 0.4}, {"delta_e", 0.25}};
  const auto fi = generate(cfg);
  CHECK(fi.metric == PerformanceMetric::SubproblemFeasibility);
  CHECK(fi.pset.lower(0) == doctest::Approx(7.25));
  CHECK(fi.pset.upper(0) == doctest::Approx(7.75));
  for (int t = 1; t <= 3; ++t) {
    CHECK(fi.pset.lower(t) == 0.1);
    CHECK(fi.pset.upper(t) == 0.4);
  }
  CHECK_FALSE(fi.pset.discrete_coords.empty());
}
