#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "scpv/encoder.hpp"
#include "scpv/families.hpp"
#include "scpv/oracle.hpp"

#include <random>

using namespace scpv;

namespace {

double witness_residual(const FamilyInstance& fi, const InexactnessModel& inexact, int K,
                        int samples, std::uint64_t seed) {
  EncoderOptions eo;
  eo.final_feasibility_declared = fi.final_feasible;
  const EncodedProgram enc = build_program(fi.metric, fi.problem, fi.schedule, fi.pset, inexact, K, eo);
  std::mt19937_64 rng(seed);
  RunOptions ro;
  ro.stop_on_infeasible = fi.metric != PerformanceMetric::SubproblemFeasibility;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vec x = fi.pset.sample(rng);
    const IterateTrace tr = run_schedule(fi.problem, enc.layout.schedule, x, ro);
    Vec zstar;
    const Vec* zp = nullptr;
    if (fi.metric == PerformanceMetric::Suboptimality) {
      zstar = reference_oracle(fi.problem, x, oracle_for(fi.problem)).argmin;
      zp = &zstar;
    }
    const auto w = witness_from_trace(enc, fi.problem, tr, zp);
    const auto v = check_assignment(enc.prog, w);
    if (v.max() > worst) {
      worst = v.max();
      MESSAGE(fi.problem.n << " sample " << s << ": " << v.worst << " = " << v.max());
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("forward traces are feasible points of the program") {
  for (const auto& f : family_ids()) {
    CAPTURE(f);
    FamilyConfig cfg;
    cfg.family = f;
    cfg.K = 2;
    const FamilyInstance fi = generate(cfg);
    CHECK(witness_residual(fi, {}, -1, 10, 11) <= 1e-6);
  }
}
