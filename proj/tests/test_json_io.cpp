#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "scpv/encoder.hpp"
#include "scpv/families.hpp"
#include "scpv/json_io.hpp"

#include <random>

using namespace scpv;

TEST_CASE("problem files round trip for every family") {
  for (const auto& f : family_ids()) {
    CAPTURE(f);
    FamilyConfig cfg;
    cfg.family = f;
    const auto fi = generate(cfg);
    ProblemFile pf{fi.problem, fi.schedule, fi.pset, fi.metric, fi.final_feasible};
    const Json j = problem_to_json(pf);
    const ProblemFile back = problem_from_json(Json::parse(j.dump()));
    CHECK(problem_to_json(back) == j);
    std::mt19937_64 rng(1);
    for (int s = 0; s < 5; ++s) {
      const Vec x = fi.pset.sample(rng);
      Vec z = fi.problem.z_bounds.center();
      CHECK(eval_objective(back.problem, z, x) == eval_objective(fi.problem, z, x));
      CHECK(eval_violation(back.problem, z, x) == eval_violation(fi.problem, z, x));
    }
    CHECK(back.schedule.K() == fi.schedule.K());
    CHECK(back.metric == fi.metric);
  }
}

TEST_CASE("problem file errors name the field") {
  const Json ok = Json::parse(R"({
    "n": 1, "d": 1,
    "objective": {"P": [[1]], "K": [[-1]], "c": [0]},
    "ineq": [{"c": [1], "r0": -2}],
    "z_bounds": {"lower": [-3], "upper": [3]},
    "parameter_set": {"lower": [0], "upper": [1]},
    "schedule": [{"type": "trust_region", "rho": 0.5}],
    "init": {"type": "cold", "point": [0]}
  })");
  const ProblemFile pf = problem_from_json(ok);
  CHECK(pf.problem.objective.P(0, 0) == 1.0);
  CHECK(pf.problem.objective.r.size() == 1);
  CHECK_FALSE(pf.metric.has_value());

  auto broken = [&](const char* ptr, const Json& v) {
    Json j = ok;
    j[Json::json_pointer(ptr)] = v;
    return j;
  };
  CHECK_THROWS_WITH_AS(problem_from_json(broken("/objective/P", Json::parse("[[1, 2]]"))),
                       doctest::Contains("objective.P"), ConfigError);
  CHECK_THROWS_AS(problem_from_json(broken("/schedule/0/type", "warp")), ConfigError);
  CHECK_THROWS_AS(problem_from_json(broken("/parameter_set/lower", Json::parse("[0, 0]"))), ConfigError);
  CHECK_THROWS_AS(problem_from_json(broken("/schedule/0/rho", -1.0)), ConfigError);
  Json missing = ok;
  missing.erase("z_bounds");
  CHECK_THROWS_WITH_AS(problem_from_json(missing), doctest::Contains("z_bounds"), ConfigError);
}

TEST_CASE("infinite numbers survive serialization") {
  CHECK(json_num(Json::parse(num_json(kInf).dump())) == kInf);
  CHECK(json_num(Json::parse(num_json(-kInf).dump())) == -kInf);
  CHECK(json_num(Json::parse(num_json(1.25).dump())) == 1.25);
  CHECK_THROWS_AS(json_num(Json("abc")), ConfigError);
}

TEST_CASE("reports and programs serialize to parseable JSON") {
  FamilyConfig cfg;
  cfg.family = "knapsack";
  cfg.K = 1;
  const auto fi = generate(cfg);
  const auto tr = run_schedule(fi.problem, fi.schedule, fi.pset.center());
  const Json t = Json::parse(trace_json(tr).dump());
  CHECK(t["iterates"].size() == tr.iterates.size());
  CHECK(t["steps"][0]["qp"]["status"] == "optimal");
  const auto rep = sample_maximum(fi.problem, fi.schedule, fi.pset, fi.metric, 4, 1);
  const Json r = Json::parse(report_json(rep).dump());
  CHECK(r["max_per_iter"].size() == rep.max_per_iter.size());
  const auto enc = build_program(fi.metric, fi.problem, fi.schedule, fi.pset, {}, -1);
  const Json p = Json::parse(program_json(enc.prog).dump());
  CHECK(p["vars"].size() == static_cast<size_t>(enc.prog.num_vars()));
  CHECK(p["rows"].size() == enc.prog.rows.size());
  GlobalResult g;
  g.status = GlobalStatus::Converged;
  g.best_value = 1.0;
  g.upper_bound = 1.0;
  g.gap = 0.0;
  const Json gj = Json::parse(global_result_json(g).dump());
  CHECK(gj["status"] == to_string(GlobalStatus::Converged));
  CHECK_FALSE(gj.contains("witness"));
}
