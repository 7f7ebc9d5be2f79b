// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails. Optional arguments select criteria by number.

#include "scpv/encoder.hpp"
#include "scpv/families.hpp"
#include "scpv/globopt.hpp"
#include "scpv/lpfile.hpp"
#include "scpv/oracle.hpp"
#include "scpv/qp.hpp"
#include "scpv/scprun.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace scpv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

bool certified(const GlobalResult& r) {
  return (r.status == GlobalStatus::Converged || r.status == GlobalStatus::GapReached) &&
         !r.dual_cap_active;
}

GlobalResult verify(const EncodedProgram& enc, const FamilyInstance& fi, double rel_gap,
                    double abs_gap = 1e-9, double time_limit = 600.0) {
  GlobalOptions o;
  o.rel_gap = rel_gap;
  o.abs_gap = abs_gap;
  o.time_limit = time_limit;
  o.callback = forward_incumbent(enc, fi.problem, fi.pset, oracle_for(fi.problem));
  return solve_global(enc.prog, o);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string interval(const GlobalResult& r) {
  return "[" + fmt(r.best_value) + ", " + fmt(r.upper_bound) + "] " + to_string(r.status);
}

// Programs compiled by criteria 3-8, collected for the LP round trip.
std::vector<std::pair<std::string, VerificationProgram>>& compiled() {
  static std::vector<std::pair<std::string, VerificationProgram>> all;
  return all;
}
void keep(const std::string& name, const VerificationProgram& p) { compiled().emplace_back(name, p); }

// ---------------------------------------------------------------------------
// 1. QP solver vs active-set enumeration.

struct Hand {
  bool found = false;
  Vec u;
};

// Tries every active set of the inequality rows; equality pairs are always active. The
// strictly convex problem has one KKT point, the first consistent active set gives it.
Hand active_set_solution(const Mat& P, const Vec& c, const Mat& G, const Vec& h, const Mat& E,
                         const Vec& e) {
  const int n = static_cast<int>(c.size()), m = static_cast<int>(h.size()),
            me = static_cast<int>(e.size());
  Hand out;
  for (long mask = 0; mask < (1L << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1) act.push_back(i);
    const int na = static_cast<int>(act.size()) + me;
    if (na > n) continue;
    Mat C(na, n);
    Vec d(na);
    for (int r = 0; r < me; ++r) C.row(r) = E.row(r), d(r) = e(r);
    for (size_t r = 0; r < act.size(); ++r) C.row(me + r) = G.row(act[r]), d(me + r) = h(act[r]);
    Mat KKT = Mat::Zero(n + na, n + na);
    KKT.topLeftCorner(n, n) = P;
    KKT.topRightCorner(n, na) = C.transpose();
    KKT.bottomLeftCorner(na, n) = C;
    Vec rhs(n + na);
    rhs << -c, d;
    Eigen::FullPivLU<Mat> lu(KKT);
    if (lu.rank() < n + na) continue;
    const Vec sol = lu.solve(rhs);
    const Vec u = sol.head(n), lam = sol.tail(na);
    bool ok = true;
    for (int r = me; r < na; ++r) ok = ok && lam(r) >= -1e-10;
    if (m > 0) ok = ok && ((G * u - h).maxCoeff() <= 1e-10);
    if (!ok) continue;
    out.found = true;
    out.u = u;
    return out;
  }
  return out;
}

Outcome criterion1() {
  std::mt19937_64 rng(101);
  double worst_kkt = 0.0, worst_u = 0.0;
  int unsolved = 0, mismatched = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const int m = static_cast<int>(rng() % 9);
    const int me = static_cast<int>(rng() % std::min(3, n));
    Mat M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = uniform(rng, -1, 1);
    const Mat P = M * M.transpose() + 0.1 * Mat::Identity(n, n);
    Vec c(n), u0(n);
    for (int i = 0; i < n; ++i) c(i) = uniform(rng, -3, 3), u0(i) = uniform(rng, -1, 1);
    Mat G(m, n), E(me, n);
    Vec h(m), e(me);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) G(i, j) = uniform(rng, -1, 1);
      h(i) = G.row(i).dot(u0) + uniform(rng, 0, 0.5);
    }
    for (int i = 0; i < me; ++i) {
      for (int j = 0; j < n; ++j) E(i, j) = uniform(rng, -1, 1);
      e(i) = E.row(i).dot(u0);
    }
    StandardQP qp;
    qp.P = P;
    qp.c = c;
    qp.A.resize(m + 2 * me, n);
    qp.b.resize(m + 2 * me);
    qp.is_eq.assign(m + 2 * me, 0);
    qp.A.topRows(m) = G;
    qp.b.head(m) = h;
    for (int i = 0; i < me; ++i) {
      qp.A.row(m + 2 * i) = E.row(i);
      qp.b(m + 2 * i) = e(i);
      qp.A.row(m + 2 * i + 1) = -E.row(i);
      qp.b(m + 2 * i + 1) = -e(i);
      qp.is_eq[m + 2 * i] = qp.is_eq[m + 2 * i + 1] = 1;
    }
    const QPSolution sol = solve_qp(qp);
    const Hand hand = active_set_solution(P, c, G, h, E, e);
    if (sol.status != QPStatus::Optimal || !hand.found) {
      ++unsolved;
      continue;
    }
    // Residuals recomputed here rather than trusted from the solver.
    const Vec s = qp.b - qp.A * sol.u;
    double kkt = (qp.P * sol.u + qp.A.transpose() * sol.y + qp.c).lpNorm<Eigen::Infinity>();
    kkt = std::max(kkt, (qp.A * sol.u + sol.s - qp.b).lpNorm<Eigen::Infinity>());
    kkt = std::max(kkt, std::abs(sol.s.dot(sol.y)));
    if (qp.num_rows() > 0) {
      kkt = std::max(kkt, std::max(0.0, -sol.s.minCoeff()));
      kkt = std::max(kkt, std::max(0.0, -sol.y.minCoeff()));
      kkt = std::max(kkt, std::max(0.0, -s.minCoeff()));
    }
    worst_kkt = std::max(worst_kkt, kkt);
    const double du = (sol.u - hand.u).lpNorm<Eigen::Infinity>();
    worst_u = std::max(worst_u, du);
    if (du > 1e-6 * (1.0 + hand.u.lpNorm<Eigen::Infinity>())) ++mismatched;
  }
  Outcome o;
  o.pass = unsolved == 0 && mismatched == 0 && worst_kkt <= 1e-8;
  o.detail = "max KKT residual " + fmt(worst_kkt) + ", max |u - hand| " + fmt(worst_u) +
             ", unsolved " + std::to_string(unsolved) + ", mismatched " + std::to_string(mismatched);
  return o;
}

// ---------------------------------------------------------------------------
// 2. Forward traces are feasible points of the compiled programs.

Outcome criterion2() {
  double worst_res = 0.0, worst_obj = 0.0;
  std::string where;
  for (const auto& f : family_ids()) {
    FamilyConfig cfg;
    cfg.family = f;
    const FamilyInstance fi = generate(cfg);
    EncoderOptions eo;
    eo.final_feasibility_declared = fi.final_feasible;
    const EncodedProgram enc = build_program(fi.metric, fi.problem, fi.schedule, fi.pset, {}, -1, eo);
    RunOptions ro;
    ro.stop_on_infeasible = fi.metric != PerformanceMetric::SubproblemFeasibility;
    std::mt19937_64 rng(2024);
    for (int s = 0; s < 25; ++s) {
      const Vec x = fi.pset.sample(rng);
      const IterateTrace tr = run_schedule(fi.problem, enc.layout.schedule, x, ro);
      double fstar = 0.0;
      Vec zstar;
      const Vec* zp = nullptr;
      if (fi.metric == PerformanceMetric::Suboptimality) {
        const OracleResult orc = reference_oracle(fi.problem, x, oracle_for(fi.problem));
        fstar = orc.value;
        zstar = orc.argmin;
        zp = &zstar;
      }
      const std::vector<double> w = witness_from_trace(enc, fi.problem, tr, zp);
      const double res = check_assignment(enc.prog, w).max();
      const double metric = trace_metric(fi.problem, tr, fi.metric, fstar).back();
      const double dobj = std::abs(enc.prog.objective_value(w) - metric) / std::max(1.0, std::abs(metric));
      if (res > worst_res) worst_res = res, where = f;
      worst_obj = std::max(worst_obj, dobj);
    }
  }
  Outcome o;
  o.pass = worst_res <= 1e-6 && worst_obj <= 1e-6;
  o.detail = "7 families x 25 samples: max residual " + fmt(worst_res) +
             (where.empty() ? "" : " (" + where + ")") + ", max |objective - metric| " + fmt(worst_obj);
  return o;
}

// ---------------------------------------------------------------------------
// 3. Box QP suboptimality vs a 41x41 parameter grid.

Outcome criterion3() {
  FamilyConfig cfg;
  cfg.family = "box_qp";
  cfg.n = 2;
  cfg.K = 1;
  const FamilyInstance fi = generate(cfg);
  const int N = 41;
  const double lo = 2.0, hi = 4.0, h = (hi - lo) / (N - 1);
  std::vector<std::vector<double>> g(2, std::vector<double>(N * N));
  const OracleOptions orc = oracle_for(fi.problem);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      Vec x(2);
      x << lo + h * i, lo + h * j;
      const IterateTrace tr = run_schedule(fi.problem, fi.schedule, x);
      const double fstar = reference_oracle(fi.problem, x, orc).value;
      for (int k = 0; k < 2; ++k) g[k][i * N + j] = tr.objective[k] - fstar;
    }
  Outcome o;
  o.pass = true;
  EncoderOptions eo;
  eo.final_feasibility_declared = true;
  for (int K = 0; K <= 1; ++K) {
    const auto& gk = g[K];
    double gmax = -kInf, L = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        gmax = std::max(gmax, gk[i * N + j]);
        if (i + 1 < N) L = std::max(L, std::abs(gk[(i + 1) * N + j] - gk[i * N + j]) / h);
        if (j + 1 < N) L = std::max(L, std::abs(gk[i * N + j + 1] - gk[i * N + j]) / h);
      }
    const double grid_err = L * h * std::sqrt(2.0) / 2.0;
    const EncodedProgram enc = build_program(fi.metric, fi.problem, fi.schedule, fi.pset, {}, K, eo);
    keep("box_qp K=" + std::to_string(K), enc.prog);
    const GlobalResult r = verify(enc, fi, 1e-4);
    const double dev = std::abs(r.best_value - gmax);
    const bool ok = certified(r) && dev <= grid_err + 1e-3 * std::abs(r.best_value) &&
                    r.upper_bound >= gmax - grid_err;
    o.pass = o.pass && ok;
    o.detail += "K=" + std::to_string(K) + " delta " + interval(r) + " grid " + fmt(gmax) +
                " (grid error " + fmt(grid_err) + "); ";
  }
  return o;
}

// ---------------------------------------------------------------------------
// 4. Knapsack violation vs a 21^3 parameter grid.

Outcome criterion4() {
  FamilyConfig cfg;
  cfg.family = "knapsack";
  cfg.n = 3;
  cfg.K = 2;
  const FamilyInstance fi = generate(cfg);
  std::vector<double> gmax(3, -kInf);
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j)
      for (int k = 0; k <= 20; ++k) {
        Vec x(3);
        x << 5 + 0.1 * i, 5 + 0.1 * j, 5 + 0.1 * k;
        const IterateTrace tr = run_schedule(fi.problem, fi.schedule, x);
        for (int t = 0; t < 3; ++t) gmax[t] = std::max(gmax[t], tr.violation[t]);
      }
  std::vector<GlobalResult> r;
  for (int K = 0; K <= 2; ++K) {
    const EncodedProgram enc = build_program(fi.metric, fi.problem, fi.schedule, fi.pset, {}, K, {});
    keep("knapsack K=" + std::to_string(K), enc.prog);
    r.push_back(verify(enc, fi, 1e-6));
  }
  Outcome o;
  o.pass = true;
  for (int K = 0; K <= 2; ++K) {
    o.pass = o.pass && certified(r[K]) && r[K].upper_bound >= gmax[K] - 1e-9 &&
             r[K].best_value <= 1.05 * gmax[K] + 1e-9;
    o.detail += "K=" + std::to_string(K) + " " + interval(r[K]) + " grid " + fmt(gmax[K]) + "; ";
  }
  const double stall = std::abs(r[1].best_value - r[2].best_value);
  o.pass = o.pass && stall <= 1e-6;
  o.detail += "|delta(1) - delta(2)| = " + fmt(stall);
  return o;
}

// ---------------------------------------------------------------------------
// 5. Feasibility-constrained vs enumerated optimality formulations.

FamilyInstance tightness_instance() {
  FamilyConfig cfg;
  cfg.family = "knapsack";
  cfg.n = 3;
  cfg.K = 2;
  cfg.seed = 4;
  Vec x0(3);
  x0 << 3.72588, 1.97368, 3.54229;
  cfg.x_lower = Vec(x0.array() - 0.1);
  cfg.x_upper = Vec(x0.array() + 0.1);
  FamilyInstance fi = generate(cfg);
  fi.schedule.steps.push_back(RoundStep{});
  return fi;
}

Outcome criterion5() {
  const FamilyInstance fi = tightness_instance();
  Outcome o;
  // The rounded iterate must be feasible on all of X: certify it with the violation program.
  const EncodedProgram viol = build_violation(fi.problem, fi.schedule, fi.pset, {}, -1, {});
  keep("knapsack+round violation", viol.prog);
  const GlobalResult rv = verify(viol, fi, 0.0, 1e-9);
  const bool feasible = certified(rv) && rv.upper_bound <= 1e-9;

  EncoderOptions eo;
  eo.final_feasibility_declared = true;
  const EncodedProgram a = build_suboptimality(fi.problem, fi.schedule, fi.pset, {}, -1, eo);
  // Candidate set: the feasible binary points. With parameter-free constraints they are
  // feasible for every x.
  bool param_free = fi.problem.eq.empty();
  for (const QuadraticForm& g : fi.problem.ineq) param_free = param_free && g.K.isZero(0.0);
  for (int m = 0; m < 8; ++m) {
    Vec z(3);
    for (int j = 0; j < 3; ++j) z(j) = (m >> j) & 1;
    if (eval_violation(fi.problem, z, fi.pset.center()) == 0.0)
      eo.optimality_candidates.push_back(z);
  }
  eo.enumerated_optimality = true;
  const EncodedProgram b = build_suboptimality(fi.problem, fi.schedule, fi.pset, {}, -1, eo);
  keep("knapsack+round subopt", a.prog);
  keep("knapsack+round enumerated", b.prog);
  const GlobalResult ra = verify(a, fi, 1e-7), rb = verify(b, fi, 1e-7);
  const double slack = 1e-6 + (ra.upper_bound - ra.best_value) + (rb.upper_bound - rb.best_value);
  const double diff = std::abs(ra.best_value - rb.best_value);
  const SampleMaxReport sm =
      sample_maximum(fi.problem, fi.schedule, fi.pset, PerformanceMetric::Suboptimality, 200, 9);
  o.pass = feasible && param_free && certified(ra) && certified(rb) && diff <= slack &&
           ra.best_value > 0.0 && sm.max_per_iter.back() <= ra.upper_bound + 1e-9;
  o.detail = "final violation " + interval(rv) + "; feasibility form " + interval(ra) +
             "; enumerated form (" + std::to_string(eo.optimality_candidates.size()) +
             " candidates) " + interval(rb) + "; difference " + fmt(diff) + ", sample max " +
             fmt(sm.max_per_iter.back());
  return o;
}

// ---------------------------------------------------------------------------
// 6. Rounding encodings vs projection with every tie resolution.

using Point = std::vector<double>;

struct PointLess {
  bool operator()(const Point& a, const Point& b) const {
    for (size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i] - b[i]) > 1e-7) return a[i] < b[i];
    return false;
  }
};
using PointSet = std::set<Point, PointLess>;

PointSet projections_binary(const Point& u, bool pm1) {
  PointSet out{{}};
  const double mid = pm1 ? 0.0 : 0.5, dn = pm1 ? -1.0 : 0.0, up = 1.0;
  for (double ui : u) {
    PointSet next;
    for (Point p : out) {
      if (ui <= mid) {
        Point q = p;
        q.push_back(dn);
        next.insert(q);
      }
      if (ui >= mid) {
        p.push_back(up);
        next.insert(p);
      }
    }
    out = std::move(next);
  }
  return out;
}

PointSet projections_sparse(const Point& u, int k) {
  const int n = static_cast<int>(u.size());
  PointSet out;
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double kept_min = kInf, dropped_max = 0.0;
    for (int i = 0; i < n; ++i)
      (mask >> i & 1) ? kept_min = std::min(kept_min, std::abs(u[i]))
                      : dropped_max = std::max(dropped_max, std::abs(u[i]));
    if (kept_min < dropped_max) continue;
    Point p(n, 0.0);
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) p[i] = u[i];
    out.insert(p);
  }
  return out;
}

// Outputs of the encoding over every binary assignment that admits a feasible completion.
PointSet encoded_outputs(const VerificationProgram& prog, const std::vector<int>& bins,
                         const std::vector<Expr>& v) {
  PointSet out;
  const int nb = static_cast<int>(bins.size());
  for (int mask = 0; mask < (1 << nb); ++mask) {
    VerificationProgram p = prog;
    for (int i = 0; i < nb; ++i) p.vars[bins[i]].lo = p.vars[bins[i]].hi = (mask >> i) & 1;
    GlobalOptions o;
    o.time_limit = 5.0;
    const GlobalResult r = solve_global(p, o);
    if (r.status == GlobalStatus::Infeasible || !r.has_incumbent()) continue;
    Point q;
    for (const Expr& e : v) q.push_back(e.eval(r.witness));
    out.insert(q);
  }
  return out;
}

Outcome criterion6() {
  std::mt19937_64 rng(66);
  int mismatches = 0, ties = 0, trials = 0;
  long outputs = 0;
  for (int mode = 0; mode < 3; ++mode) {
    for (int t = 0; t < 1000; ++t, ++trials) {
      const int n = 1 + static_cast<int>(rng() % 5);
      const bool pm1 = mode == 1, sparse = mode == 2;
      const double lo = pm1 ? -2.0 : (sparse ? -1.0 : -0.5), hi = pm1 ? 2.0 : (sparse ? 1.0 : 1.5);
      const double mid = pm1 ? 0.0 : 0.5;
      Point u(n);
      for (int i = 0; i < n; ++i) {
        do u[i] = uniform(rng, lo, hi);
        while (!sparse && std::abs(u[i] - mid) < 1e-4);
        if (uniform01(rng) < 0.3) {
          ++ties;
          if (!sparse)
            u[i] = mid;
          else if (i > 0)
            u[i] = (rng() & 1 ? 1.0 : -1.0) * std::abs(u[rng() % i]);
          else
            u[i] = 0.0;
        }
      }
      if (sparse) {  // keep distinct magnitudes well separated unless tied on purpose
        bool close = false;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < i; ++j) {
            const double d = std::abs(std::abs(u[i]) - std::abs(u[j]));
            close = close || (d > 0.0 && d < 1e-4);
          }
        if (close) {
          --t, --trials;
          continue;
        }
      }
      VerificationProgram prog;
      std::vector<Expr> ue, we, vout, alpha;
      for (int i = 0; i < n; ++i) {
        ue.push_back(Expr::var(prog.add_var("u" + std::to_string(i), u[i], u[i], VarRole::Iterate)));
        we.push_back(Expr::var(prog.add_var("w" + std::to_string(i), std::abs(u[i]), std::abs(u[i]),
                                            VarRole::Aux)));
      }
      PointSet expect, got;
      if (sparse) {
        const int k = 1 + static_cast<int>(rng() % n);
        const RoundHandles h = encode_sparsity_round(prog, ue, we, k, "", vout, alpha);
        expect = projections_sparse(u, k);
        got = encoded_outputs(prog, h.bin, vout);
      } else {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        const RoundHandles h = encode_binary_round(prog, ue, idx, pm1, "", vout);
        expect = projections_binary(u, pm1);
        got = encoded_outputs(prog, h.bin, vout);
      }
      const bool same = expect.size() == got.size() &&
                        std::equal(expect.begin(), expect.end(), got.begin(),
                                   [](const Point& a, const Point& b) {
                                     return !PointLess{}(a, b) && !PointLess{}(b, a);
                                   });
      mismatches += !same || expect.empty();
      outputs += static_cast<long>(got.size());
    }
  }
  Outcome o;
  o.pass = mismatches == 0;
  o.detail = std::to_string(trials) + " inputs (" + std::to_string(ties) + " injected ties), " +
             std::to_string(outputs) + " encoded outputs, " + std::to_string(mismatches) + " mismatches";
  return o;
}

// ---------------------------------------------------------------------------
// 7. Farkas feasibility frontier on the hybrid vehicle.

FamilyInstance hybrid(double p_lb, double p_ub) {
  FamilyConfig cfg;
  cfg.family = "hybrid_vehicle";
  cfg.T = 3;
  cfg.constants = {{"p_lb", p_lb}, {"p_ub", p_ub}, {"delta_e", 0.5}, {"eta", 0.0}};
  return generate(cfg);
}

Outcome criterion7() {
  const double lbs[5] = {0.0, 0.05, 0.1, 0.15, 0.2}, ubs[5] = {0.2, 0.25, 0.3, 0.35, 0.4};
  constexpr double tol = 1e-9;
  GlobalResult r[5][5];
  int verdict[5][5];  // 1 infeasible, 0 feasible, -1 unknown
  Outcome o;
  o.pass = true;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const FamilyInstance fi = hybrid(lbs[i], ubs[j]);
      const EncodedProgram enc = build_farkas(fi.problem, fi.schedule, fi.pset, {}, -1, {});
      if (i == 0) keep("hybrid p_ub=" + fmt(ubs[j]), enc.prog);
      r[i][j] = verify(enc, fi, 0.0, tol);
      o.pass = o.pass && certified(r[i][j]);
      verdict[i][j] = r[i][j].upper_bound <= tol ? 0 : (r[i][j].best_value > tol ? 1 : -1);
    }
  // Slack capacity: certified gamma <= 0.
  const bool slack_ok = verdict[0][0] == 0;
  // Over-demand: gamma > 0 and the witness parameter yields a Farkas certificate.
  bool cert_ok = false;
  double aty = kInf, bty = kInf;
  {
    const FamilyInstance fi = hybrid(lbs[0], ubs[4]);
    const EncodedProgram enc = build_farkas(fi.problem, fi.schedule, fi.pset, {}, -1, {});
    const GlobalResult& g = r[0][4];
    if (verdict[0][4] == 1 && g.has_incumbent()) {
      Vec x(fi.problem.d);
      for (int j = 0; j < fi.problem.d; ++j) x(j) = g.witness[enc.layout.x[j]];
      RunOptions ro;
      ro.stop_on_infeasible = false;
      const IterateTrace tr = run_schedule(fi.problem, fi.schedule, x, ro);
      if (tr.infeasible_step >= 0) {
        const StandardQP& qp = tr.steps.back().qp;
        const Vec y = farkas_certificate(qp.A, qp.b);
        if (y.size() > 0) {
          aty = (qp.A.transpose() * y).lpNorm<Eigen::Infinity>();
          bty = qp.b.dot(y);
          cert_ok = y.minCoeff() >= 0.0 && aty <= 1e-8 && bty < 0.0;
        }
      }
    }
  }
  // Enlarging X (lower p_lb, higher p_ub) never turns an infeasible verdict feasible.
  int flips = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int a = 0; a <= i; ++a)
        for (int b = j; b < 5; ++b) {
          if (verdict[i][j] == 1 && verdict[a][b] == 0) ++flips;
          if (r[i][j].best_value > r[a][b].upper_bound + tol) ++flips;
        }
  int infeasible = 0, unknown = 0;
  for (auto& row : verdict)
    for (int v : row) infeasible += v == 1, unknown += v == -1;
  o.pass = o.pass && slack_ok && cert_ok && flips == 0 && unknown == 0;
  o.detail = "slack gamma " + interval(r[0][0]) + "; over-demand gamma " + interval(r[0][4]) +
             " with |A'y| " + fmt(aty) + ", b'y " + fmt(bty) + "; 5x5 grid " +
             std::to_string(infeasible) + " infeasible, " + std::to_string(unknown) +
             " unknown, " + std::to_string(flips) + " monotonicity violations";
  return o;
}

// ---------------------------------------------------------------------------
// 8. Inexactness monotonicity on the power converter.

Outcome criterion8() {
  FamilyConfig cfg;
  cfg.family = "power_converter";
  cfg.T = 3;
  cfg.K = 2;
  const FamilyInstance fi = generate(cfg);
  EncoderOptions eo;
  eo.final_feasibility_declared = fi.final_feasible;
  auto run = [&](const std::string& model) {
    const EncodedProgram enc = build_program(fi.metric, fi.problem, fi.schedule, fi.pset,
                                             InexactnessModel::parse(model), -1, eo);
    keep("power_converter " + model, enc.prog);
    return verify(enc, fi, 1e-6);
  };
  Outcome o;
  const GlobalResult exact = run("exact");
  o.pass = certified(exact);
  o.detail = "exact " + interval(exact) + "; ";
  for (const std::string kind : {"dist", "kkt"}) {
    std::vector<GlobalResult> rs;
    for (const std::string eps : {"0", "0.01", "0.1"}) {
      rs.push_back(run(kind + ":" + eps));
      o.pass = o.pass && certified(rs.back());
      o.detail += kind + ":" + eps + " " + interval(rs.back()) + "; ";
    }
    for (size_t i = 0; i + 1 < rs.size(); ++i)
      o.pass = o.pass && rs[i + 1].upper_bound >= rs[i].best_value - 1e-9 &&
               rs[i + 1].best_value >= rs[i].best_value - 1e-6 * std::max(1.0, rs[i].best_value);
    o.pass = o.pass && std::abs(rs[0].best_value - exact.best_value) <= 1e-6;
  }
  return o;
}

// ---------------------------------------------------------------------------
// 9. OBBT on the box QP program keeps every forward-run point.

Outcome criterion9() {
  FamilyConfig cfg;
  cfg.family = "box_qp";
  cfg.n = 2;
  cfg.K = 1;
  const FamilyInstance fi = generate(cfg);
  EncoderOptions eo;
  eo.final_feasibility_declared = true;
  const EncodedProgram enc = build_program(fi.metric, fi.problem, fi.schedule, fi.pset, {}, 1, eo);
  const Bounds in = Bounds::of(enc.prog);
  ObbtStats st;
  const Bounds out = obbt_pass(enc.prog, in, {}, &st);
  int strictly = 0;
  for (int i = 0; i < enc.prog.num_vars(); ++i)
    if (enc.prog.vars[i].role == VarRole::Dual && (out.lo[i] > in.lo[i] || out.hi[i] < in.hi[i]))
      ++strictly;
  std::mt19937_64 rng(909);
  const OracleOptions orc = oracle_for(fi.problem);
  int outside = 0, infeasible = 0;
  for (int s = 0; s < 500; ++s) {
    const Vec x = fi.pset.sample(rng);
    const IterateTrace tr = run_schedule(fi.problem, enc.layout.schedule, x);
    const Vec zstar = reference_oracle(fi.problem, x, orc).argmin;
    const std::vector<double> w = witness_from_trace(enc, fi.problem, tr, &zstar);
    if (check_assignment(enc.prog, w).max() > 1e-6) ++infeasible;
    for (int i = 0; i < enc.prog.num_vars(); ++i) {
      const double t = 1e-6 * (1.0 + std::abs(w[i]));
      if (w[i] < out.lo[i] - t || w[i] > out.hi[i] + t) {
        ++outside;
        break;
      }
    }
  }
  Outcome o;
  o.pass = strictly >= 1 && outside == 0 && infeasible == 0;
  o.detail = std::to_string(strictly) + " dual bounds strictly tightened (" +
             std::to_string(st.tightened) + " variables in total); 500 samples: " +
             std::to_string(outside) + " outside, " + std::to_string(infeasible) + " infeasible";
  return o;
}

// ---------------------------------------------------------------------------
// 10. Random bilinear programs vs a dense grid.

Outcome criterion10() {
  std::mt19937_64 rng(1010);
  double worst = 0.0;
  int bad = 0;
  for (int t = 0; t < 50; ++t) {
    const int d = 2 + static_cast<int>(rng() % 2);
    VerificationProgram p;
    std::vector<double> lo(d), hi(d), c(d);
    for (int i = 0; i < d; ++i) {
      lo[i] = uniform(rng, -2, 0);
      hi[i] = lo[i] + uniform(rng, 0.5, 2.5);
      c[i] = uniform(rng, -1, 1);
      p.add_var("x" + std::to_string(i), lo[i], hi[i], VarRole::Aux);
    }
    // Up to 6 - d product terms (pairs or squares).
    struct Term {
      int i, j;
      double q;
    };
    std::vector<Term> terms;
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) pairs.emplace_back(i, j);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const int nt = 1 + static_cast<int>(rng() % std::min<size_t>(6 - d, pairs.size()));
    for (int k = 0; k < nt; ++k) terms.push_back({pairs[k].first, pairs[k].second, uniform(rng, -2, 2)});
    Expr f;
    for (int i = 0; i < d; ++i) f += c[i] * Expr::var(i);
    for (const Term& tm : terms) f += tm.q * (Expr::var(tm.i) * Expr::var(tm.j));
    p.set_objective(f);
    if (p.num_vars() > 6) return {false, "generated program exceeds 6 variables"};
    GlobalOptions o;
    o.rel_gap = 1e-6;
    const GlobalResult r = solve_global(p, o);

    // Gradient bound over the box for the grid error.
    std::vector<double> amax(d), grad(c.begin(), c.end());
    for (int i = 0; i < d; ++i) amax[i] = std::max(std::abs(lo[i]), std::abs(hi[i]));
    for (const Term& tm : terms) {
      grad[tm.i] = std::abs(grad[tm.i]) + std::abs(tm.q) * (tm.i == tm.j ? 2.0 : 1.0) * amax[tm.j];
      if (tm.i != tm.j) grad[tm.j] = std::abs(grad[tm.j]) + std::abs(tm.q) * amax[tm.i];
    }
    double L2 = 0.0;
    for (double gi : grad) L2 += gi * gi;
    const int N = d == 2 ? 401 : 101;
    std::vector<double> hstep(d);
    double diag = 0.0;
    for (int i = 0; i < d; ++i) hstep[i] = (hi[i] - lo[i]) / (N - 1), diag += hstep[i] * hstep[i];
    const double err = std::sqrt(L2) * std::sqrt(diag) / 2.0;
    double grid = -kInf;
    std::vector<int> ix(d, 0);
    std::vector<double> pt(d);
    while (true) {
      for (int i = 0; i < d; ++i) pt[i] = lo[i] + hstep[i] * ix[i];
      double val = 0.0;
      for (int i = 0; i < d; ++i) val += c[i] * pt[i];
      for (const Term& tm : terms) val += tm.q * pt[tm.i] * pt[tm.j];
      grid = std::max(grid, val);
      int k = 0;
      while (k < d && ++ix[k] == N) ix[k++] = 0;
      if (k == d) break;
    }
    const double dev = std::abs(r.best_value - grid);
    worst = std::max(worst, dev);
    if (!certified(r) || dev > err + 1e-6 * std::max(1.0, std::abs(grid)) ||
        r.upper_bound < grid - 1e-9)
      ++bad;
  }
  Outcome o;
  o.pass = bad == 0;
  o.detail = "50 programs, max |solver - grid| " + fmt(worst) + ", " + std::to_string(bad) +
             " outside the grid error";
  return o;
}

// ---------------------------------------------------------------------------
// 11. LP export round trip of the programs compiled above.

Outcome criterion11() {
  Outcome o;
  if (compiled().empty()) return {false, "no programs compiled (run together with criteria 3-8)"};
  o.pass = true;
  int bad = 0;
  std::string first_bad;
  for (const auto& [name, prog] : compiled()) {
    const VerificationProgram back = parse_lp(to_lp(prog));
    bool same = back.num_vars() == prog.num_vars() && back.rows.size() == prog.rows.size() &&
                back.binaries() == prog.binaries() && back.products.size() == prog.products.size() &&
                back.implications.size() == prog.implications.size();
    for (int i = 0; same && i < prog.num_vars(); ++i)
      same = back.vars[i].lo == prog.vars[i].lo && back.vars[i].hi == prog.vars[i].hi &&
             back.vars[i].binary == prog.vars[i].binary;
    for (size_t r = 0; same && r < prog.rows.size(); ++r)
      same = back.rows[r].lo == prog.rows[r].lo && back.rows[r].hi == prog.rows[r].hi;
    if (!same) {
      ++bad;
      if (first_bad.empty()) first_bad = name;
    }
  }
  o.pass = o.pass && bad == 0;
  o.detail = std::to_string(compiled().size()) + " programs, " + std::to_string(bad) + " differ" +
             (first_bad.empty() ? "" : " (first: " + first_bad + ")");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> all = {
      criterion1, criterion2, criterion3, criterion4,  criterion5, criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11};
  // Runtime budgets in seconds.
  const double limit[] = {10, 300, 600, 900, 600, 30, 600, 900, 300, 300, 60};
  std::vector<int> pick;
  for (int a = 1; a < argc; ++a) pick.push_back(std::atoi(argv[a]));
  if (pick.empty())
    for (int i = 1; i <= static_cast<int>(all.size()); ++i) pick.push_back(i);
  int failed = 0;
  for (int c : pick) {
    if (c < 1 || c > static_cast<int>(all.size())) {
      std::cerr << "no criterion " << c << "\n";
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[c - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > limit[c - 1]) {
      o.pass = false;
      o.detail += "; over the " + fmt(limit[c - 1]) + " s budget";
    }
    std::printf("criterion %2d %s  %s  (%.1f s)\n", c, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
