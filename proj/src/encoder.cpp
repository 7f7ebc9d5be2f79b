#include "scpv/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace scpv {

namespace {

std::string idx(const std::string& base, int i) { return base + "(" + std::to_string(i) + ")"; }

double abs_max(Interval I) { return std::max(std::abs(I.lo), std::abs(I.hi)); }

Expr sum(const std::vector<int>& vars) {
  Expr e;
  for (int v : vars) e += Expr::var(v);
  return e;
}

void require_degree(const Expr& e, int d, const std::string& what) {
  if (e.degree() > d) throw EncodeError(what);
}

}  // namespace

InexactnessModel InexactnessModel::parse(const std::string& s) {
  InexactnessModel m;
  if (s == "exact") return m;
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad inexactness model: " + s);
  const std::string kind = s.substr(0, colon);
  if (kind == "dist")
    m.kind = DistanceToOpt;
  else if (kind == "kkt")
    m.kind = KKTResidual;
  else
    throw std::invalid_argument("bad inexactness model: " + s);
  size_t used = 0;
  m.eps = std::stod(s.substr(colon + 1), &used);
  if (used != s.size() - colon - 1 || !(m.eps >= 0.0))
    throw std::invalid_argument("bad inexactness tolerance: " + s);
  return m;
}

std::string InexactnessModel::str() const {
  std::ostringstream os;
  switch (kind) {
    case Exact: return "exact";
    case DistanceToOpt: os << "dist:" << eps; break;
    case KKTResidual: os << "kkt:" << eps; break;
  }
  return os.str();
}

QPHandles encode_qp_step(VerificationProgram& prog, const StepQP<Expr>& qp, const Box& zb,
                         const InexactnessModel& inexact, const std::string& tag, double cap,
                         std::vector<Expr>& u_out) {
  const int nu = qp.num_vars(), m = qp.num_rows();
  const double band = inexact.kind == InexactnessModel::KKTResidual ? inexact.eps : 0.0;
  QPHandles h;
  // Columns bounded directly first, row-bounded auxiliaries afterwards.
  h.u_exact.assign(nu, -1);
  for (int j = 0; j < nu; ++j) {
    const UBound& ub = qp.ubound[j];
    double lo = 0.0, hi = 0.0;
    if (ub.kind == UBound::Z) {
      lo = zb.lower(ub.index);
      hi = zb.upper(ub.index);
    } else if (ub.kind == UBound::Abs) {
      hi = std::max(std::abs(zb.lower(ub.index)), std::abs(zb.upper(ub.index)));
    }
    const std::string base = inexact.kind == InexactnessModel::DistanceToOpt ? "ue" : "u";
    h.u_exact[j] = prog.add_var(idx(base + tag, j), lo, hi, VarRole::Primal);
  }
  for (int j = 0; j < nu; ++j) {
    const UBound& ub = qp.ubound[j];
    if (ub.kind != UBound::Row) continue;
    Expr e = -qp.b[ub.index];
    for (int c = 0; c < nu; ++c)
      if (!qp.aux[c]) e += qp.A[ub.index][c] * Expr::var(h.u_exact[c]);
    e *= static_cast<double>(ub.sign);
    prog.vars[h.u_exact[j]].hi = std::max(0.0, prog.bounds(e).hi + band);
  }
  if (inexact.kind == InexactnessModel::DistanceToOpt) {
    h.u.resize(nu);
    for (int j = 0; j < nu; ++j) {
      const double lo = prog.vars[h.u_exact[j]].lo, hi = prog.vars[h.u_exact[j]].hi;
      h.u[j] = prog.add_var(idx("u" + tag, j), lo - inexact.eps, hi + inexact.eps, VarRole::Primal);
      prog.add_row(Expr::var(h.u[j]) - Expr::var(h.u_exact[j]), -inexact.eps, inexact.eps,
                   idx("dist" + tag, j));
    }
  } else {
    h.u = h.u_exact;
  }
  auto row_expr = [&](int r) {
    Expr e = -qp.b[r];
    for (int c = 0; c < nu; ++c) e += qp.A[r][c] * Expr::var(h.u_exact[c]);
    return e;
  };
  for (int r = 0; r < m;) {
    QPHandles::Row row;
    row.first = r;
    const Expr e = row_expr(r);
    if (qp.is_eq[r] && r + 1 < m && qp.is_eq[r + 1]) {
      row.merged = true;
      row.y = prog.add_var(idx("y" + tag, r), -cap, cap, VarRole::Dual);
      prog.add_row(e, -band, band, idx("prim" + tag, r));
      r += 2;
    } else {
      const double shi = std::max(0.0, -prog.bounds(e).lo + band);
      row.s = prog.add_var(idx("s" + tag, r), 0.0, shi, VarRole::Slack);
      row.y = prog.add_var(idx("y" + tag, r), 0.0, cap, VarRole::Dual);
      prog.add_row(e + Expr::var(row.s), -band, band, idx("prim" + tag, r));
      if (shi > 0.0) {
        row.comp = prog.product(row.s, row.y);
        prog.vars[row.comp].lo = prog.vars[row.comp].hi = 0.0;
        prog.products.back().complementarity = true;
      }
      r += 1;
    }
    h.rows.push_back(row);
  }
  for (int j = 0; j < nu; ++j) {
    Expr e = qp.c[j];
    require_degree(e, 1, "step cost must be affine in earlier variables");
    for (int c = 0; c < nu; ++c)
      if (qp.P(j, c) != 0.0) e += qp.P(j, c) * Expr::var(h.u_exact[c]);
    for (const auto& row : h.rows) {
      const Expr& a = qp.A[row.first][j];
      if (a.is_constant() && a.constant() == 0.0) continue;
      require_degree(a, 1, "step constraint matrix must be affine in earlier variables");
      e += a * Expr::var(row.y);
    }
    prog.add_row(e, -band, band, idx("stat" + tag, j));
  }
  u_out.clear();
  for (int v : h.u) u_out.push_back(Expr::var(v));
  return h;
}

RoundHandles encode_binary_round(VerificationProgram& prog, const std::vector<Expr>& u,
                                 const std::vector<int>& indices, bool pm1, const std::string& tag,
                                 std::vector<Expr>& v_out) {
  RoundHandles h;
  h.indices = indices;
  v_out = u;
  for (int i : indices) {
    const Interval I = prog.bounds(u[i]);
    // Nearest-point rounding is exact for u within half a unit of the {0,1} hull.
    const double lo = pm1 ? -2.0 : -0.5, hi = pm1 ? 2.0 : 1.5;
    if (I.lo < lo - 1e-12 || I.hi > hi + 1e-12)
      throw EncodeError("rounding input " + std::to_string(i) + " outside the admissible range");
    const int b = prog.add_binary(idx((pm1 ? "b" : "v") + tag, i));
    const Expr v = pm1 ? 2.0 * Expr::var(b) - 1.0 : Expr::var(b);
    const double half = pm1 ? 1.0 : 0.5;
    prog.add_row(v - u[i], -kInf, half, idx("rnd_hi" + tag, i));
    prog.add_row(u[i] - v, -kInf, half, idx("rnd_lo" + tag, i));
    h.bin.push_back(b);
    v_out[i] = v;
  }
  return h;
}

RoundHandles encode_sparsity_round(VerificationProgram& prog, const std::vector<Expr>& u,
                                   const std::vector<Expr>& w, int k, const std::string& tag,
                                   std::vector<Expr>& v_out, std::vector<Expr>& alpha_out) {
  const int n = static_cast<int>(u.size());
  if (static_cast<int>(w.size()) != n) throw EncodeError("sparsity rounding needs |u|");
  RoundHandles h;
  double tmax = 0.0;
  for (int i = 0; i < n; ++i) {
    const Interval I = prog.bounds(w[i]);
    if (!std::isfinite(I.hi) || !std::isfinite(prog.bounds(u[i]).width()))
      throw EncodeError("sparsity rounding needs bounded inputs");
    tmax = std::max(tmax, I.hi);
  }
  h.t = prog.add_var("t" + tag, 0.0, tmax, VarRole::Threshold);
  v_out.assign(n, Expr());
  alpha_out.assign(n, Expr());
  for (int i = 0; i < n; ++i) {
    h.indices.push_back(i);
    const int a = prog.add_binary(idx("a" + tag, i));
    h.bin.push_back(a);
    const Interval I = hull(prog.bounds(u[i]), Interval::point(0.0));
    const int v = prog.add_var(idx("v" + tag, i), I.lo, I.hi, VarRole::Iterate);
    h.v.push_back(v);
    const Expr t = Expr::var(h.t);
    prog.add_implication(a, 0, w[i] - t, -kInf, 0.0, idx("sel_le" + tag, i));
    prog.add_implication(a, 1, w[i] - t, 0.0, kInf, idx("sel_ge" + tag, i));
    prog.add_implication(a, 0, Expr::var(v), 0.0, 0.0, idx("drop" + tag, i));
    prog.add_implication(a, 1, Expr::var(v) - u[i], 0.0, 0.0, idx("keep" + tag, i));
    v_out[i] = Expr::var(v);
    alpha_out[i] = Expr::var(a);
  }
  prog.add_row(sum(h.bin), k, k, "card" + tag);
  return h;
}

namespace {

struct Compiler {
  const ParametricProblem& pb;
  const ParameterSet& pset;
  const InexactnessModel& inexact;
  const EncoderOptions& opt;
  EncodedProgram out;
  std::vector<Expr> x;
  IterState<Expr> state;
  Box zb;

  Compiler(const ParametricProblem& p, const ParameterSet& s, const InexactnessModel& in,
           const EncoderOptions& o)
      : pb(p), pset(s), inexact(in), opt(o), zb(p.z_bounds) {}

  VerificationProgram& prog() { return out.prog; }

  void params() {
    auto& L = out.layout;
    for (int j = 0; j < pb.d; ++j) {
      const double lo = pset.lower(j), hi = pset.upper(j);
      const int v = prog().add_var(idx("x", j), lo, hi, VarRole::Param);
      L.x.push_back(v);
      int sel = -1;
      if (pset.is_discrete(j) && hi > lo) {
        sel = prog().add_binary(idx("xs", j), VarRole::ParamSelector);
        prog().add_row(Expr::var(v) - (hi - lo) * Expr::var(sel), lo, lo, idx("xsel", j));
      }
      L.x_sel.push_back(sel);
      x.push_back(Expr::var(v));
    }
  }

  void init() {
    if (const auto z0 = initial_point(out.layout.schedule.init))
      for (int j = 0; j < pb.n; ++j) state.z.push_back(Expr((*z0)(j)));
  }

  void steps(int count) {
    const auto& sched = out.layout.schedule;
    for (int k = 0; k < count; ++k) {
      const std::string tag = std::to_string(k);
      StepHandles sh;
      const StepSpec& spec = sched.steps[k];
      if (std::holds_alternative<RoundStep>(spec)) {
        sh.is_round = true;
        IterState<Expr> next;
        if (const auto* s = std::get_if<SparsityConstraint>(&pb.discrete)) {
          sh.round = encode_sparsity_round(prog(), state.z, state.abs, s->k, tag, next.z, next.support);
        } else {
          const bool pm1 = std::holds_alternative<PlusMinusOneConstraint>(pb.discrete);
          sh.round = encode_binary_round(prog(), state.z, discrete_indices(pb), pm1, tag, next.z);
        }
        state = std::move(next);
      } else {
        const StepQP<Expr> sq = build_step_qp<Expr>(spec, pb, x, state);
        std::vector<Expr> u;
        sh.qp = encode_qp_step(prog(), sq, zb, inexact, tag, opt.dual_cap, u);
        state = next_state(sq, u, state);
      }
      out.layout.steps.push_back(std::move(sh));
    }
  }

  // |c| exactly, through a sign selector.
  int abs_exact(const Expr& c, const std::string& name, int& sigma) {
    const Interval I = prog().bounds(c);
    const int p = prog().add_var(name, 0.0, abs_max(I), VarRole::Aux);
    sigma = prog().add_binary("sg_" + name);
    prog().add_row(Expr::var(p) - c, 0.0, kInf, name + "_ge_pos");
    prog().add_row(Expr::var(p) + c, 0.0, kInf, name + "_ge_neg");
    prog().add_implication(sigma, 1, Expr::var(p) - c, -kInf, 0.0, name + "_eq_pos");
    prog().add_implication(sigma, 0, Expr::var(p) + c, -kInf, 0.0, name + "_eq_neg");
    return p;
  }

  Expr objective_at(const std::vector<Expr>& z, bool exact_abs, std::vector<int>& pvars,
                    std::vector<int>* sigmas, const std::string& tag) {
    Expr f = quad_value(pb.objective, z, x, false);
    for (size_t t = 0; t < pb.abs_terms.size(); ++t) {
      const Expr c = quad_value(pb.abs_terms[t].inner, z, x, true);
      const std::string name = idx("p" + tag, static_cast<int>(t));
      int p;
      if (exact_abs) {
        int sg;
        p = abs_exact(c, name, sg);
        sigmas->push_back(sg);
      } else {
        p = prog().add_var(name, 0.0, abs_max(prog().bounds(c)), VarRole::Aux);
        prog().add_row(Expr::var(p) - c, 0.0, kInf, name + "_ge_pos");
        prog().add_row(Expr::var(p) + c, 0.0, kInf, name + "_ge_neg");
      }
      pvars.push_back(p);
      f += pb.abs_terms[t].weight * Expr::var(p);
    }
    return f;
  }

  void suboptimality() {
    auto& L = out.layout;
    const Expr fK = objective_at(state.z, true, L.absK_p, &L.absK_sigma, "k");
    Expr fstar;
    if (opt.enumerated_optimality) {
      if (opt.optimality_candidates.empty())
        throw EncodeError("enumerated optimality needs candidates");
      if (!pb.abs_terms.empty()) throw EncodeError("candidate cuts do not support abs terms");
      std::vector<Expr> fe;
      for (size_t e = 0; e < opt.optimality_candidates.size(); ++e) {
        L.zstar_pick.push_back(prog().add_binary(idx("pick", static_cast<int>(e)), VarRole::Comparator));
        fe.push_back(quad_value(pb.objective, to_scalars<Expr>(opt.optimality_candidates[e]), x, false));
      }
      prog().add_row(sum(L.zstar_pick), 1.0, 1.0, "pick_one");
      L.candidates = opt.optimality_candidates;
      for (size_t e = 0; e < fe.size(); ++e) fstar += fe[e] * Expr::var(L.zstar_pick[e]);
      for (size_t e = 0; e < fe.size(); ++e)
        prog().add_row(fstar - fe[e], -kInf, 0.0, idx("optcut", static_cast<int>(e)));
      prog().set_objective(fK - fstar);
      return;
    }
    std::vector<Expr> zs(pb.n);
    L.zstar.assign(pb.n, -1);
    L.zstar_bin.assign(pb.n, -1);
    std::vector<char> bin(pb.n, 0), pm(pb.n, 0);
    if (const auto* b = std::get_if<BinaryConstraint>(&pb.discrete))
      for (int i : b->indices) bin[i] = 1;
    if (const auto* p = std::get_if<PlusMinusOneConstraint>(&pb.discrete))
      for (int i : p->indices) pm[i] = 1;
    for (int j = 0; j < pb.n; ++j) {
      if (pm[j]) {
        L.zstar_bin[j] = prog().add_binary(idx("bs", j), VarRole::Comparator);
        zs[j] = 2.0 * Expr::var(L.zstar_bin[j]) - 1.0;
        continue;
      }
      double lo = zb.lower(j), hi = zb.upper(j);
      if (bin[j]) {
        lo = 0.0;
        hi = 1.0;
      }
      L.zstar[j] = prog().add_var(idx("zs", j), lo, hi, VarRole::Comparator, bin[j] != 0);
      zs[j] = Expr::var(L.zstar[j]);
    }
    if (const auto* s = std::get_if<SparsityConstraint>(&pb.discrete)) {
      for (int j = 0; j < pb.n; ++j) {
        const int a = prog().add_binary(idx("as", j), VarRole::Comparator);
        L.zstar_alpha.push_back(a);
        prog().add_implication(a, 0, zs[j], 0.0, 0.0, idx("zs_off", j));
      }
      prog().add_row(sum(L.zstar_alpha), -kInf, s->k, "zs_card");
    }
    for (size_t i = 0; i < pb.ineq.size(); ++i)
      prog().add_row(quad_value(pb.ineq[i], zs, x, true), -kInf, 0.0, idx("zs_g", static_cast<int>(i)));
    for (size_t i = 0; i < pb.eq.size(); ++i)
      prog().add_row(quad_value(pb.eq[i], zs, x, true), 0.0, 0.0, idx("zs_h", static_cast<int>(i)));
    fstar = objective_at(zs, false, L.abs_star_p, nullptr, "s");
    if (!pb.abs_terms.empty() || !opt.optimality_candidates.empty()) {
      for (size_t e = 0; e < opt.optimality_candidates.size(); ++e) {
        if (!pb.abs_terms.empty()) throw EncodeError("candidate cuts do not support abs terms");
        const Expr fe = quad_value(pb.objective, to_scalars<Expr>(opt.optimality_candidates[e]), x, false);
        prog().add_row(fstar - fe, -kInf, 0.0, idx("optcut", static_cast<int>(e)));
      }
    }
    prog().set_objective(fK - fstar);
  }

  void violation() {
    auto& L = out.layout;
    Expr obj;
    for (size_t i = 0; i < pb.ineq.size(); ++i) {
      const int ii = static_cast<int>(i);
      const Expr g = quad_value(pb.ineq[i], state.z, x, true);
      const Interval I = prog().bounds(g);
      if (I.hi <= 0.0) {
        L.viol_p.push_back(-1);
        L.viol_sigma.push_back(-1);
        continue;
      }
      const int p = prog().add_var(idx("pv", ii), 0.0, I.hi, VarRole::Aux);
      const int sg = prog().add_binary(idx("sv", ii));
      prog().add_row(Expr::var(p) - g, 0.0, kInf, idx("pv_ge", ii));
      prog().add_implication(sg, 1, Expr::var(p) - g, -kInf, 0.0, idx("pv_act", ii));
      prog().add_implication(sg, 0, Expr::var(p), -kInf, 0.0, idx("pv_off", ii));
      L.viol_p.push_back(p);
      L.viol_sigma.push_back(sg);
      obj += Expr::var(p) * Expr::var(p);
    }
    for (size_t i = 0; i < pb.eq.size(); ++i) {
      const int ii = static_cast<int>(i);
      const Expr h = quad_value(pb.eq[i], state.z, x, true);
      const Interval I = prog().bounds(h);
      const int r = prog().add_var(idx("hv", ii), I.lo, I.hi, VarRole::Aux);
      prog().add_row(Expr::var(r) - h, 0.0, 0.0, idx("hv_def", ii));
      L.eq_res.push_back(r);
      obj += Expr::var(r) * Expr::var(r);
    }
    prog().set_objective(obj);
  }

  void farkas(const StepSpec& final_step) {
    auto& L = out.layout;
    if (!is_qp_step(final_step)) throw EncodeError("final step has no linear constraints");
    const StepQP<Expr> sq = build_step_qp<Expr>(final_step, pb, x, state);
    const int m = sq.num_rows(), nu = sq.num_vars();
    for (int r = 0; r < m; ++r) L.farkas_y.push_back(prog().add_var(idx("yf", r), 0.0, 1.0, VarRole::Farkas));
    for (int j = 0; j < nu; ++j) {
      Expr e;
      for (int r = 0; r < m; ++r) {
        const Expr& a = sq.A[r][j];
        if (a.is_constant() && a.constant() == 0.0) continue;
        require_degree(a, 1, "final step constraint matrix must be affine");
        e += a * Expr::var(L.farkas_y[r]);
      }
      if (e.degree() > 0) prog().add_row(e, 0.0, 0.0, idx("farkas_col", j));
    }
    prog().add_row(sum(L.farkas_y), -kInf, 1.0, "farkas_norm");
    Expr obj;
    for (int r = 0; r < m; ++r) {
      require_degree(sq.b[r], 1, "final step right-hand side must be affine");
      obj -= sq.b[r] * Expr::var(L.farkas_y[r]);
    }
    prog().set_objective(obj);
  }
};

}  // namespace

EncodedProgram build_program(PerformanceMetric metric, const ParametricProblem& problem,
                             const AlgorithmSchedule& schedule, const ParameterSet& pset,
                             const InexactnessModel& inexact, int K, const EncoderOptions& opt) {
  const ValidationReport rep = validate(problem, schedule, pset);
  if (!rep.ok()) throw EncodeError("invalid configuration: " + rep.issues.front());
  if (inexact.eps < 0.0) throw EncodeError("negative inexactness tolerance");
  Compiler c(problem, pset, inexact, opt);
  c.prog().dual_cap = opt.dual_cap;
  auto& L = c.out.layout;
  L.metric = metric;
  L.schedule = K < 0 ? schedule : schedule.truncated(K);
  c.params();
  c.init();
  const int nsteps = L.schedule.K();
  auto metric_block = [&] { c.prog().metric_mode = true; };
  switch (metric) {
    case PerformanceMetric::Suboptimality:
      if (!opt.final_feasibility_declared)
        throw EncodeError("suboptimality needs a declared or verified feasible final iterate");
      c.steps(nsteps);
      metric_block();
      c.suboptimality();
      break;
    case PerformanceMetric::ViolationSquaredL2:
      c.steps(nsteps);
      metric_block();
      c.violation();
      break;
    case PerformanceMetric::SubproblemFeasibility:
      if (nsteps == 0) throw EncodeError("feasibility metric needs at least one step");
      c.steps(nsteps - 1);
      metric_block();
      c.farkas(L.schedule.steps.back());
      break;
  }
  c.prog().metric_mode = false;
  return std::move(c.out);
}

EncodedProgram build_suboptimality(const ParametricProblem& problem,
                                   const AlgorithmSchedule& schedule, const ParameterSet& pset,
                                   const InexactnessModel& inexact, int K,
                                   const EncoderOptions& opt) {
  return build_program(PerformanceMetric::Suboptimality, problem, schedule, pset, inexact, K, opt);
}

EncodedProgram build_violation(const ParametricProblem& problem, const AlgorithmSchedule& schedule,
                               const ParameterSet& pset, const InexactnessModel& inexact, int K,
                               const EncoderOptions& opt) {
  return build_program(PerformanceMetric::ViolationSquaredL2, problem, schedule, pset, inexact, K,
                       opt);
}

EncodedProgram build_farkas(const ParametricProblem& problem, const AlgorithmSchedule& schedule,
                            const ParameterSet& pset, const InexactnessModel& inexact, int K,
                            const EncoderOptions& opt) {
  return build_program(PerformanceMetric::SubproblemFeasibility, problem, schedule, pset, inexact,
                       K, opt);
}

std::vector<double> witness_from_trace(const EncodedProgram& enc, const ParametricProblem& pb,
                                       const IterateTrace& trace, const Vec* zstar) {
  const auto& prog = enc.prog;
  const auto& L = enc.layout;
  std::vector<double> v(prog.num_vars(), std::numeric_limits<double>::quiet_NaN());
  const Vec& xv = trace.x;
  for (size_t j = 0; j < L.x.size(); ++j) {
    v[L.x[j]] = xv(j);
    if (L.x_sel[j] >= 0) {
      const auto& xs = prog.vars[L.x[j]];
      v[L.x_sel[j]] = xv(j) > 0.5 * (xs.lo + xs.hi) ? 1.0 : 0.0;
    }
  }
  const int offset = trace.has_initial ? 1 : 0;
  for (size_t k = 0; k < L.steps.size(); ++k) {
    if (k >= trace.steps.size()) throw std::invalid_argument("trace shorter than the program");
    const auto& sh = L.steps[k];
    const auto& art = trace.steps[k];
    if (sh.is_round) {
      const auto& st = trace.states.at(k + offset);
      if (sh.round.t >= 0) {
        v[sh.round.t] = art.round.round_threshold_t;
        for (size_t i = 0; i < sh.round.indices.size(); ++i) {
          v[sh.round.bin[i]] = st.support[sh.round.indices[i]];
          v[sh.round.v[i]] = st.z[sh.round.indices[i]];
        }
      } else {
        const bool pm1 = std::holds_alternative<PlusMinusOneConstraint>(pb.discrete);
        for (size_t i = 0; i < sh.round.indices.size(); ++i) {
          const double z = st.z[sh.round.indices[i]];
          v[sh.round.bin[i]] = pm1 ? 0.5 * (z + 1.0) : z;
        }
      }
      continue;
    }
    const QPSolution& sol = art.solution;
    for (size_t j = 0; j < sh.qp.u.size(); ++j) {
      v[sh.qp.u[j]] = sol.u(j);
      v[sh.qp.u_exact[j]] = sol.u(j);
    }
    for (const auto& row : sh.qp.rows) {
      if (row.merged) {
        v[row.y] = sol.y(row.first) - sol.y(row.first + 1);
      } else {
        v[row.s] = sol.s(row.first);
        v[row.y] = sol.y(row.first);
      }
    }
  }
  // The final iterate and parameter, for the metric blocks.
  const Vec zK = trace.iterates.empty() ? Vec() : trace.iterates.back();
  auto abs_inner = [&](const Vec& z, size_t t) {
    return pb.abs_terms[t].inner.eval(z, xv);
  };
  switch (L.metric) {
    case PerformanceMetric::Suboptimality: {
      for (size_t t = 0; t < L.absK_p.size(); ++t) {
        const double c = abs_inner(zK, t);
        v[L.absK_p[t]] = std::abs(c);
        v[L.absK_sigma[t]] = c >= 0.0 ? 1.0 : 0.0;
      }
      if (!zstar) throw std::invalid_argument("witness needs z*");
      if (!L.zstar_pick.empty()) {
        size_t best = 0;
        for (size_t e = 0; e < L.candidates.size(); ++e) {
          v[L.zstar_pick[e]] = 0.0;
          if ((L.candidates[e] - *zstar).norm() < (L.candidates[best] - *zstar).norm()) best = e;
        }
        v[L.zstar_pick[best]] = 1.0;
        break;
      }
      for (int j = 0; j < pb.n; ++j) {
        if (L.zstar[j] >= 0) v[L.zstar[j]] = (*zstar)(j);
        if (L.zstar_bin[j] >= 0) v[L.zstar_bin[j]] = 0.5 * ((*zstar)(j) + 1.0);
      }
      for (size_t j = 0; j < L.zstar_alpha.size(); ++j)
        v[L.zstar_alpha[j]] = (*zstar)(j) != 0.0 ? 1.0 : 0.0;
      for (size_t t = 0; t < L.abs_star_p.size(); ++t) v[L.abs_star_p[t]] = std::abs(abs_inner(*zstar, t));
      break;
    }
    case PerformanceMetric::ViolationSquaredL2:
      for (size_t i = 0; i < L.viol_p.size(); ++i) {
        if (L.viol_p[i] < 0) continue;
        const double g = pb.ineq[i].eval(zK, xv);
        v[L.viol_p[i]] = std::max(g, 0.0);
        v[L.viol_sigma[i]] = g > 0.0 ? 1.0 : 0.0;
      }
      for (size_t i = 0; i < L.eq_res.size(); ++i) v[L.eq_res[i]] = pb.eq[i].eval(zK, xv);
      break;
    case PerformanceMetric::SubproblemFeasibility: {
      const size_t last = L.steps.size();
      if (last >= trace.steps.size()) throw std::invalid_argument("trace lacks the final step");
      const auto& art = trace.steps[last];
      const bool infeasible = art.solution.status == QPStatus::PrimalInfeasible;
      for (size_t r = 0; r < L.farkas_y.size(); ++r) v[L.farkas_y[r]] = infeasible ? art.solution.y(r) : 0.0;
      break;
    }
  }
  recompute_products(prog, v);
  for (int i = 0; i < prog.num_vars(); ++i)
    if (std::isnan(v[i])) throw std::logic_error("witness leaves " + prog.vars[i].name + " unset");
  return v;
}

}  // namespace scpv
