#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "scpv/encoder.hpp"
#include "scpv/families.hpp"
#include "scpv/globopt.hpp"
#include "scpv/lpfile.hpp"

#include <random>

using namespace scpv;

namespace {

Expr v(int i) { return Expr::var(i); }

bool near(double a, double b) { return a == b || std::abs(a - b) <= 1e-9 * (1 + std::abs(a)); }

void same_program(const VerificationProgram& a, const VerificationProgram& b) {
  REQUIRE(a.num_vars() == b.num_vars());
  for (int i = 0; i < a.num_vars(); ++i) {
    CAPTURE(a.vars[i].name);
    CHECK(lp_name(a.vars[i].name) == b.vars[i].name);
    CHECK(a.vars[i].lo == b.vars[i].lo);
    CHECK(a.vars[i].hi == b.vars[i].hi);
    CHECK(a.vars[i].binary == b.vars[i].binary);
    CHECK(a.vars[i].role == b.vars[i].role);
    CHECK(a.vars[i].metric == b.vars[i].metric);
  }
  CHECK(a.rows.size() == b.rows.size());
  CHECK(a.products.size() == b.products.size());
  CHECK(a.implications.size() == b.implications.size());
  CHECK(a.binaries().size() == b.binaries().size());
  CHECK(a.dual_cap == b.dual_cap);
  for (size_t k = 0; k < std::min(a.products.size(), b.products.size()); ++k) {
    CHECK(a.products[k].w == b.products[k].w);
    CHECK(a.products[k].i == b.products[k].i);
    CHECK(a.products[k].j == b.products[k].j);
    CHECK(a.products[k].complementarity == b.products[k].complementarity);
  }
  // Same objective, rows and implications: evaluate on random points inside the box.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int s = 0; s < 20; ++s) {
    std::vector<double> pt(a.num_vars());
    for (int i = 0; i < a.num_vars(); ++i) {
      const double lo = std::max(a.vars[i].lo, -10.0), hi = std::min(a.vars[i].hi, 10.0);
      pt[i] = a.vars[i].binary ? std::round(U(rng)) : lo + (hi - lo) * U(rng);
    }
    CHECK(a.objective_value(pt) == doctest::Approx(b.objective_value(pt)).epsilon(1e-12));
    for (size_t r = 0; r < std::min(a.rows.size(), b.rows.size()); ++r) {
      CHECK(a.rows[r].eval(pt) == doctest::Approx(b.rows[r].eval(pt)).epsilon(1e-12));
      CHECK(a.rows[r].lo == b.rows[r].lo);
      CHECK(a.rows[r].hi == b.rows[r].hi);
    }
    for (size_t k = 0; k < std::min(a.implications.size(), b.implications.size()); ++k) {
      CHECK(a.implications[k].binary == b.implications[k].binary);
      CHECK(a.implications[k].value == b.implications[k].value);
      CHECK(near(a.implications[k].row.lo, b.implications[k].row.lo));
      CHECK(near(a.implications[k].row.hi, b.implications[k].row.hi));
      CHECK(a.implications[k].row.eval(pt) ==
            doctest::Approx(b.implications[k].row.eval(pt)).epsilon(1e-10));
    }
    CHECK(check_assignment(a, pt).max() == doctest::Approx(check_assignment(b, pt).max()).epsilon(1e-9));
  }
}

}  // namespace

TEST_CASE("names are sanitized") {
  CHECK(lp_name("x[0]") == "x_0_");
  CHECK(lp_name("a b:c") == "a_b_c");
  CHECK(lp_name("3x") == "_3x");
  CHECK(lp_name("free") == "_free");
  CHECK(lp_name("z(1,2)") == "z(1,2)");
}

TEST_CASE("small program round trip") {
  VerificationProgram p;
  p.dual_cap = 100;
  const int x = p.add_var("x[0]", -1, 2, VarRole::Param);
  const int y = p.add_var("y", -kInf, kInf, VarRole::Dual);
  const int s = p.add_var("s", 0, 3, VarRole::Slack);
  const int b = p.add_binary("b");
  const int w = p.product(x, x);
  const int c = p.product(s, x);
  p.add_row(v(x) + 2 * v(y), -1, 1, "range");
  p.add_row(v(x) - v(s), 0.5, 0.5, "eq");
  p.add_row(3 * v(y), -kInf, 4, "upper");
  p.add_implication(b, 1, v(x) + v(s), -kInf, 1.0, "imp1");
  p.add_implication(b, 0, v(x), 0.0, 1.5, "imp0");
  p.set_objective(v(w) - 0.25 * v(c) + 1.5);
  const std::string text = to_lp(p);
  CHECK(text.find("Maximize") != std::string::npos);
  CHECK(text.find("[ - x_0_ ^ 2 ]") != std::string::npos);
  const VerificationProgram q = parse_lp(text);
  same_program(p, q);
  CHECK(q.rows[0].name == "range");
  CHECK(q.implications[0].row.name == "imp1");
  CHECK(to_lp(q) == text);
}

TEST_CASE("foreign LP text is read with the format defaults") {
  const std::string text = R"(\ hand written
Minimize
 cost: 2 a + 3 b - 1
Subject To
 c1: a + b >= 1
 a - b <= 2
Bounds
 a <= 4
 -1 <= b <= 1
End
)";
  const VerificationProgram p = parse_lp(text);
  REQUIRE(p.num_vars() == 2);
  CHECK(p.vars[0].lo == 0.0);
  CHECK(p.vars[0].hi == 4.0);
  CHECK(p.vars[1].lo == -1.0);
  CHECK(p.rows.size() == 2);
  CHECK(p.objective_constant == 1.0);
  // Minimization becomes maximization of the negation: minimum 0.5 at a = 1.5, b = -0.5.
  GlobalOptions o;
  const auto r = solve_global(p, o);
  CHECK(r.best_value == doctest::Approx(-0.5).epsilon(1e-7));
}

TEST_CASE("malformed input is rejected") {
  CHECK_THROWS_AS(parse_lp("Maximize\n obj: x\nSubject To\n c: x <= \nEnd\n"), LPParseError);
  CHECK_THROWS_AS(parse_lp("Maximize\n obj: x\n"), LPParseError);
  CHECK_THROWS_AS(parse_lp("Maximize\n obj: x\nSubject To\n q: x + [ x * y + y ^ 2 ] <= 1\nEnd\n"),
                  LPParseError);
  CHECK_THROWS_AS(parse_lp("Maximize\n obj: x\nGenerals\n x\nEnd\n"), LPParseError);
}

TEST_CASE("compiled family programs round trip") {
  for (const auto& f : family_ids()) {
    CAPTURE(f);
    FamilyConfig cfg;
    cfg.family = f;
    cfg.K = 1;
    const FamilyInstance fi = generate(cfg);
    EncoderOptions eo;
    eo.final_feasibility_declared = fi.final_feasible;
    const auto enc = build_program(fi.metric, fi.problem, fi.schedule, fi.pset, {}, -1, eo);
    const std::string text = to_lp(enc.prog);
    const VerificationProgram q = parse_lp(text);
    same_program(enc.prog, q);
    CHECK(to_lp(q) == text);
  }
}
