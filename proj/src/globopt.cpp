#include "scpv/globopt.hpp"

#include "scpv/oracle.hpp"
#include "scpv/scprun.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <queue>

namespace scpv {

Bounds Bounds::of(const VerificationProgram& prog) { return {prog.lower(), prog.upper()}; }

std::string to_string(GlobalStatus s) {
  switch (s) {
    case GlobalStatus::Converged: return "converged";
    case GlobalStatus::GapReached: return "gap_reached";
    case GlobalStatus::TimeLimit: return "time_limit";
    case GlobalStatus::NodeLimit: return "node_limit";
    case GlobalStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

namespace {

// Propagated bounds are loosened by this relative amount so round-off never cuts a
// feasible point.
constexpr double kLoosen = 1e-9;

double loosen(double v, bool up) {
  const double d = kLoosen * (1.0 + std::abs(v));
  return up ? v + d : v - d;
}

struct Propagator {
  const VerificationProgram& prog;
  Bounds& b;
  bool changed = false;
  bool empty = false;

  void check(int i) {
    if (b.lo[i] <= b.hi[i]) return;
    if (b.lo[i] > b.hi[i] + 1e-7 * (1.0 + std::abs(b.hi[i]))) {
      empty = true;
    } else {
      const double m = 0.5 * (b.lo[i] + b.hi[i]);
      b.lo[i] = b.hi[i] = m;
    }
  }

  void set_lo(int i, double v) {
    if (!std::isfinite(v)) return;
    if (prog.vars[i].binary) {
      if (v > 1e-6 && b.lo[i] < 1.0) {
        b.lo[i] = v > 1.0 + 1e-6 ? v : 1.0;
        changed = true;
      }
      check(i);
      return;
    }
    v = loosen(v, false);
    if (v <= b.lo[i]) return;
    if (v - b.lo[i] > 1e-7 * (1.0 + std::abs(v)) + 1e-4 * (b.hi[i] - b.lo[i])) changed = true;
    b.lo[i] = v;
    check(i);
  }

  void set_hi(int i, double v) {
    if (!std::isfinite(v)) return;
    if (prog.vars[i].binary) {
      if (v < 1.0 - 1e-6 && b.hi[i] > 0.0) {
        b.hi[i] = v < -1e-6 ? v : 0.0;
        changed = true;
      }
      check(i);
      return;
    }
    v = loosen(v, true);
    if (v >= b.hi[i]) return;
    if (b.hi[i] - v > 1e-7 * (1.0 + std::abs(v)) + 1e-4 * (b.hi[i] - b.lo[i])) changed = true;
    b.hi[i] = v;
    check(i);
  }

  struct Activity {
    double min = 0.0, max = 0.0;
    int inf_min = 0, inf_max = 0;
  };

  Activity activity(const LinearRow& r) const {
    Activity a;
    for (const auto& [i, c] : r.terms) {
      const double lo = c > 0 ? mul_bound(c, b.lo[i]) : mul_bound(c, b.hi[i]);
      const double hi = c > 0 ? mul_bound(c, b.hi[i]) : mul_bound(c, b.lo[i]);
      if (std::isfinite(lo)) a.min += lo; else ++a.inf_min;
      if (std::isfinite(hi)) a.max += hi; else ++a.inf_max;
    }
    return a;
  }

  static double tol_of(double v) { return 1e-7 * (1.0 + std::abs(v)); }

  bool row_infeasible(const LinearRow& r, const Activity& a) const {
    if (a.inf_min == 0 && std::isfinite(r.hi) && a.min > r.hi + tol_of(r.hi) + 1e-9 * std::abs(a.min))
      return true;
    if (a.inf_max == 0 && std::isfinite(r.lo) && a.max < r.lo - tol_of(r.lo) - 1e-9 * std::abs(a.max))
      return true;
    return false;
  }

  void row(const LinearRow& r) {
    const Activity a = activity(r);
    if (row_infeasible(r, a)) {
      empty = true;
      return;
    }
    for (const auto& [i, c] : r.terms) {
      if (c == 0.0) continue;
      const double lo_t = c > 0 ? mul_bound(c, b.lo[i]) : mul_bound(c, b.hi[i]);
      const double hi_t = c > 0 ? mul_bound(c, b.hi[i]) : mul_bound(c, b.lo[i]);
      // c * v_i <= r.hi - min(others), c * v_i >= r.lo - max(others)
      double min_others = kInf, max_others = kInf;
      if (a.inf_min == 0) min_others = a.min - lo_t;
      else if (a.inf_min == 1 && !std::isfinite(lo_t)) min_others = a.min;
      if (a.inf_max == 0) max_others = a.max - hi_t;
      else if (a.inf_max == 1 && !std::isfinite(hi_t)) max_others = a.max;
      if (std::isfinite(r.hi) && std::isfinite(min_others)) {
        const double t = (r.hi - min_others) / c;
        if (c > 0) set_hi(i, t); else set_lo(i, t);
      }
      if (std::isfinite(r.lo) && std::isfinite(max_others)) {
        const double t = (r.lo - max_others) / c;
        if (c > 0) set_lo(i, t); else set_hi(i, t);
      }
      if (empty) return;
    }
  }

  void product(const ProductDef& p) {
    const Interval I{b.lo[p.i], b.hi[p.i]}, J{b.lo[p.j], b.hi[p.j]};
    if (p.complementarity) {
      if (b.lo[p.i] > 1e-9) set_hi(p.j, 0.0);
      if (b.lo[p.j] > 1e-9) set_hi(p.i, 0.0);
    }
    if (p.i == p.j) {
      const Interval w = square(I);
      set_lo(p.w, w.lo);
      set_hi(p.w, w.hi);
      if (empty) return;
      if (b.hi[p.w] >= 0.0) {
        const double r = std::sqrt(b.hi[p.w]);
        set_lo(p.i, -r);
        set_hi(p.i, r);
      }
      if (b.lo[p.w] > 0.0) {
        const double r = std::sqrt(b.lo[p.w]);
        if (b.lo[p.i] > -r) set_lo(p.i, r);
        if (b.hi[p.i] < r) set_hi(p.i, -r);
      }
      return;
    }
    const Interval w = I * J;
    set_lo(p.w, w.lo);
    set_hi(p.w, w.hi);
    if (empty) return;
    const Interval W{b.lo[p.w], b.hi[p.w]};
    auto divide = [&](int target, Interval den) {
      if (!(den.lo > 0.0 || den.hi < 0.0)) return;
      const Interval inv{1.0 / den.hi, 1.0 / den.lo};
      const Interval q = W * inv;
      set_lo(target, q.lo);
      set_hi(target, q.hi);
    };
    divide(p.i, J);
    if (empty) return;
    divide(p.j, Interval{b.lo[p.i], b.hi[p.i]});
  }

  void implication(const Implication& imp) {
    const int z = imp.binary;
    const bool fixed = b.lo[z] == b.hi[z];
    if (fixed) {
      if (static_cast<int>(std::lround(b.lo[z])) == imp.value) row(imp.row);
      return;
    }
    if (row_infeasible(imp.row, activity(imp.row))) {
      if (imp.value == 1) set_hi(z, 0.0); else set_lo(z, 1.0);
    }
  }

  bool run(int max_rounds) {
    for (int i = 0; i < b.size(); ++i) {
      if (prog.vars[i].binary) {
        set_lo(i, b.lo[i]);
        set_hi(i, b.hi[i]);
      }
      check(i);
      if (empty) return false;
    }
    for (int round = 0; round < max_rounds; ++round) {
      changed = false;
      for (const auto& r : prog.rows) {
        row(r);
        if (empty) return false;
      }
      for (const auto& p : prog.products) {
        product(p);
        if (empty) return false;
      }
      for (const auto& imp : prog.implications) {
        implication(imp);
        if (empty) return false;
      }
      if (!changed) break;
    }
    return true;
  }
};

void add_row(LinearProgram& lp, std::map<int, double> terms, double lo, double hi) {
  SparseRow r;
  for (const auto& [i, a] : terms)
    if (a != 0.0) r.terms.emplace_back(i, a);
  r.lo = lo;
  r.hi = hi;
  lp.rows.push_back(std::move(r));
}

void add_row(LinearProgram& lp, const std::vector<std::pair<int, double>>& terms, double lo,
             double hi) {
  std::map<int, double> m;
  for (const auto& [i, a] : terms) m[i] += a;
  add_row(lp, std::move(m), lo, hi);
}

}  // namespace

bool interval_propagate(const VerificationProgram& prog, Bounds& b, int max_rounds) {
  Propagator p{prog, b};
  return p.run(max_rounds);
}

LinearProgram relax(const VerificationProgram& prog, const Bounds& b) {
  LinearProgram lp;
  for (int i = 0; i < prog.num_vars(); ++i) lp.add_col(b.lo[i], b.hi[i]);
  for (const auto& [i, a] : prog.objective) lp.obj[i] -= a;
  for (const auto& r : prog.rows) add_row(lp, r.terms, r.lo, r.hi);
  for (const auto& p : prog.products) {
    const double li = b.lo[p.i], ui = b.hi[p.i];
    if (p.i == p.j) {
      // Secant above, tangents at lo, hi and the midpoint below.
      add_row(lp, std::map<int, double>{{p.w, 1.0}, {p.i, -(li + ui)}}, -kInf, -li * ui);
      for (double t : {li, ui, 0.5 * (li + ui)})
        add_row(lp, std::map<int, double>{{p.w, 1.0}, {p.i, -2.0 * t}}, -t * t, kInf);
      continue;
    }
    const double lj = b.lo[p.j], uj = b.hi[p.j];
    // w >= lj vi + li vj - li lj,  w >= uj vi + ui vj - ui uj
    add_row(lp, std::map<int, double>{{p.w, 1.0}, {p.i, -lj}, {p.j, -li}}, -li * lj, kInf);
    add_row(lp, std::map<int, double>{{p.w, 1.0}, {p.i, -uj}, {p.j, -ui}}, -ui * uj, kInf);
    // w <= lj vi + ui vj - ui lj,  w <= uj vi + li vj - li uj
    add_row(lp, std::map<int, double>{{p.w, 1.0}, {p.i, -lj}, {p.j, -ui}}, -kInf, -ui * lj);
    add_row(lp, std::map<int, double>{{p.w, 1.0}, {p.i, -uj}, {p.j, -li}}, -kInf, -li * uj);
  }
  for (const auto& imp : prog.implications) {
    const int z = imp.binary;
    if (b.lo[z] == b.hi[z]) {
      if (static_cast<int>(std::lround(b.lo[z])) == imp.value)
        add_row(lp, imp.row.terms, imp.row.lo, imp.row.hi);
      continue;
    }
    const auto [mlo, mhi] = big_m(imp, b.lo, b.hi);
    std::map<int, double> t;
    for (const auto& [i, a] : imp.row.terms) t[i] += a;
    if (std::isfinite(imp.row.hi)) {
      auto h = t;
      // value 1: a'v <= hi + M(1 - z);  value 0: a'v <= hi + M z
      h[z] += imp.value == 1 ? mhi : -mhi;
      add_row(lp, std::move(h), -kInf, imp.row.hi + (imp.value == 1 ? mhi : 0.0));
    }
    if (std::isfinite(imp.row.lo)) {
      auto l = t;
      l[z] += imp.value == 1 ? -mlo : mlo;
      add_row(lp, std::move(l), imp.row.lo - (imp.value == 1 ? mlo : 0.0), kInf);
    }
  }
  return lp;
}

BranchDecision choose_branch(const VerificationProgram& prog, const Bounds& b,
                             const std::vector<double>& point, double tol) {
  BranchDecision d;
  double best = tol;
  for (int i = 0; i < prog.num_vars(); ++i) {
    if (!prog.vars[i].binary || b.lo[i] == b.hi[i]) continue;
    const double frac = std::min(point[i] - b.lo[i], b.hi[i] - point[i]);
    if (frac > best) {
      best = frac;
      d.kind = BranchDecision::Binary;
      d.var = i;
      d.up_first = point[i] >= 0.5;
    }
  }
  if (d.kind != BranchDecision::None) return d;

  best = tol;
  for (const auto& p : prog.products) {
    if (!p.complementarity) continue;
    if (b.hi[p.i] <= 0.0 || b.hi[p.j] <= 0.0) continue;
    const double si = std::max(0.0, point[p.i]) / b.hi[p.i];
    const double sj = std::max(0.0, point[p.j]) / b.hi[p.j];
    const double v = si * sj;
    if (v > best && std::max(0.0, point[p.i]) * std::max(0.0, point[p.j]) > tol) {
      best = v;
      d.kind = BranchDecision::Complementarity;
      d.var = p.i;
      d.other = p.j;
      // First child zeroes the smaller one.
      d.up_first = si <= sj;
    }
  }
  if (d.kind != BranchDecision::None) return d;

  best = tol;
  for (const auto& p : prog.products) {
    if (p.complementarity) continue;
    const double viol = std::abs(point[p.w] - point[p.i] * point[p.j]);
    if (viol <= tol * (1.0 + std::abs(point[p.w])) || viol <= best) continue;
    auto rel = [&](int k) {
      const double declared = prog.vars[k].hi - prog.vars[k].lo;
      const double w = b.width(k);
      if (w <= 1e-9 * (1.0 + std::abs(b.lo[k]))) return 0.0;
      return declared > 0 ? w / declared : w;
    };
    const double ri = rel(p.i), rj = p.i == p.j ? 0.0 : rel(p.j);
    if (ri == 0.0 && rj == 0.0) continue;
    const int k = ri >= rj ? p.i : p.j;
    best = viol;
    d.kind = BranchDecision::Spatial;
    d.var = k;
    const double w = b.width(k);
    d.split = std::clamp(point[k], b.lo[k] + 0.1 * w, b.hi[k] - 0.1 * w);
    d.up_first = point[k] - b.lo[k] > b.hi[k] - point[k];
  }
  return d;
}

std::pair<Bounds, Bounds> branch(const Bounds& b, const BranchDecision& d) {
  Bounds down = b, up = b;
  switch (d.kind) {
    case BranchDecision::Binary:
      down.hi[d.var] = 0.0;
      up.lo[d.var] = 1.0;
      break;
    case BranchDecision::Complementarity:
      // "down" zeroes var, "up" zeroes other.
      down.hi[d.var] = 0.0;
      up.hi[d.other] = 0.0;
      return {down, up};
    case BranchDecision::Spatial:
      down.hi[d.var] = d.split;
      up.lo[d.var] = d.split;
      break;
    case BranchDecision::None:
      break;
  }
  if (d.up_first) return {up, down};
  return {down, up};
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Node {
  Bounds b;
  double bound = kInf;
  int depth = 0;
  bool cap = false;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& c) const {
    if (a.bound != c.bound) return a.bound < c.bound;
    return a.depth < c.depth;
  }
};

bool touches_cap(const VerificationProgram& prog, const Bounds& b, const std::vector<double>& v) {
  if (prog.dual_cap <= 0.0) return false;
  const double cap = prog.dual_cap;
  const double tol = 1e-6 * std::max(1.0, cap);
  for (int i = 0; i < prog.num_vars(); ++i) {
    if (prog.vars[i].role != VarRole::Dual) continue;
    if (v[i] >= cap - tol && b.hi[i] >= cap - tol) return true;
    if (v[i] <= -cap + tol && b.lo[i] <= -cap + tol) return true;
  }
  return false;
}

}  // namespace

GlobalResult solve_global(const VerificationProgram& prog, const GlobalOptions& opt) {
  const auto t0 = Clock::now();
  GlobalResult res;
  Bounds root = Bounds::of(prog);
  for (const auto& [name, lh] : opt.initial_bounds) {
    const int i = prog.find_var(name);
    if (i < 0) continue;
    root.lo[i] = std::max(root.lo[i], lh.first);
    root.hi[i] = std::min(root.hi[i], lh.second);
  }
  auto finish = [&](GlobalStatus st) {
    res.status = st;
    res.seconds = elapsed(t0);
    if (res.has_incumbent()) {
      res.gap = (res.upper_bound - res.best_value) / std::max(1.0, std::abs(res.best_value));
      res.dual_cap_active = res.dual_cap_active || touches_cap(prog, Bounds::of(prog), res.witness);
    }
    return res;
  };
  if (!interval_propagate(prog, root)) {
    res.root = root;
    res.upper_bound = -kInf;
    return finish(GlobalStatus::Infeasible);
  }
  if (opt.obbt) {
    ObbtOptions oo;
    oo.time_limit = std::max(1.0, 0.3 * opt.time_limit);
    root = obbt_pass(prog, root, oo);
    if (!interval_propagate(prog, root)) {
      res.root = root;
      res.upper_bound = -kInf;
      return finish(GlobalStatus::Infeasible);
    }
  }
  res.root = root;

  auto offer = [&](std::vector<double> v) {
    if (static_cast<int>(v.size()) != prog.num_vars()) return;
    for (int i = 0; i < prog.num_vars(); ++i) v[i] = std::clamp(v[i], prog.vars[i].lo, prog.vars[i].hi);
    recompute_products(prog, v);
    if (check_assignment(prog, v).max() > opt.feas_tol) return;
    const double val = prog.objective_value(v);
    if (val > res.best_value) {
      res.best_value = val;
      res.witness = std::move(v);
    }
  };
  auto prune_tol = [&] {
    if (!res.has_incumbent()) return -kInf;
    return std::max(opt.abs_gap, opt.rel_gap * std::max(1.0, std::abs(res.best_value)));
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::optional<Node> dive;
  dive = Node{root, kInf, 0, false};
  double pruned_max = -kInf;  // largest bound among nodes closed by the gap test
  double stuck_max = -kInf;   // nodes that could neither be solved nor branched
  bool stuck_cap = false;
  long processed = 0;

  auto upper = [&] {
    double u = std::max({pruned_max, stuck_max, res.best_value});
    if (!open.empty()) u = std::max(u, open.top().bound);
    if (dive) u = std::max(u, dive->bound);
    return u;
  };
  auto log_line = [&](int depth) {
    if (!opt.log) return;
    char buf[256];
    const double ub = upper();
    const double gap = res.has_incumbent()
                           ? (ub - res.best_value) / std::max(1.0, std::abs(res.best_value))
                           : kInf;
    std::snprintf(buf, sizeof buf, "node=%ld depth=%d bound=%.9g incumbent=%.9g gap=%.3g\n",
                  processed, depth, ub, res.best_value, gap);
    *opt.log << buf << std::flush;
  };

  GlobalStatus status = GlobalStatus::Converged;
  while (dive || !open.empty()) {
    res.upper_bound = upper();
    if (res.has_incumbent() && processed > 0) {
      const double diff = res.upper_bound - res.best_value;
      if (diff <= opt.abs_gap || diff <= opt.rel_gap * std::max(1.0, std::abs(res.best_value))) {
        status = GlobalStatus::GapReached;
        break;
      }
    }
    if (elapsed(t0) > opt.time_limit) {
      status = GlobalStatus::TimeLimit;
      break;
    }
    if (processed >= opt.node_limit) {
      status = GlobalStatus::NodeLimit;
      break;
    }
    Node node;
    if (dive) {
      node = std::move(*dive);
      dive.reset();
    } else {
      node = open.top();
      open.pop();
    }
    if (node.bound <= res.best_value + prune_tol()) {
      pruned_max = std::max(pruned_max, node.bound);
      continue;
    }
    ++processed;
    if (opt.log && opt.log_every > 0 && processed % opt.log_every == 0) log_line(node.depth);
    if (node.depth > 0 && !interval_propagate(prog, node.b)) continue;

    const LinearProgram lp = relax(prog, node.b);
    const LPResult sol = solve_simplex(lp);
    if (sol.status == LPStatus::Infeasible) continue;
    double bound = node.bound;
    BranchDecision d;
    if (sol.status == LPStatus::Optimal) {
      bound = std::min(node.bound, -sol.value + prog.objective_constant);
      if (bound <= res.best_value + prune_tol()) {
        pruned_max = std::max(pruned_max, bound);
        continue;
      }
      offer(sol.x);
      if (opt.callback && (node.depth == 0 || processed % std::max(1, opt.callback_every) == 0)) {
        try {
          if (auto w = opt.callback(sol.x, node.b, node.depth == 0)) offer(std::move(*w));
        } catch (const std::exception&) {
        }
      }
      node.cap = touches_cap(prog, node.b, sol.x);
      d = choose_branch(prog, node.b, sol.x);
      if (d.kind == BranchDecision::None) {
        // The relaxation point is feasible up to tolerance; its value closes the node.
        std::vector<double> v = sol.x;
        recompute_products(prog, v);
        if (check_assignment(prog, v).max() > opt.feas_tol) {
          stuck_max = std::max(stuck_max, bound);
          stuck_cap = stuck_cap || node.cap;
        } else {
          pruned_max = std::max(pruned_max, bound);
        }
        continue;
      }
    } else {
      // No usable relaxation: split the operand with the widest relative box.
      double best = 0.0;
      for (const auto& p : prog.products)
        for (int k : {p.i, p.j}) {
          const double declared = prog.vars[k].hi - prog.vars[k].lo;
          const double rel = declared > 0 ? node.b.width(k) / declared : 0.0;
          if (rel > best && node.b.width(k) > 1e-9) {
            best = rel;
            d.kind = BranchDecision::Spatial;
            d.var = k;
            d.split = 0.5 * (node.b.lo[k] + node.b.hi[k]);
          }
        }
      if (d.kind == BranchDecision::None) {
        stuck_max = std::max(stuck_max, bound);
        stuck_cap = true;
        continue;
      }
    }
    auto [first, second] = branch(node.b, d);
    open.push(Node{std::move(second), bound, node.depth + 1, node.cap});
    dive = Node{std::move(first), bound, node.depth + 1, node.cap};
  }
  if (!dive && open.empty()) status = GlobalStatus::Converged;
  res.nodes = processed;
  res.upper_bound = upper();
  if (!res.has_incumbent() && status == GlobalStatus::Converged && stuck_max == -kInf) {
    res.upper_bound = -kInf;
    return finish(GlobalStatus::Infeasible);
  }
  bool cap = stuck_cap && stuck_max >= res.upper_bound;
  if (!open.empty() && open.top().bound >= res.upper_bound) cap = cap || open.top().cap;
  if (dive && dive->bound >= res.upper_bound) cap = cap || dive->cap;
  res.dual_cap_active = cap;
  log_line(0);
  return finish(status);
}

Bounds obbt_pass(const VerificationProgram& prog, const Bounds& b, const ObbtOptions& opt,
                 ObbtStats* stats) {
  const auto t0 = Clock::now();
  Bounds cur = b;
  ObbtStats st;
  if (!interval_propagate(prog, cur)) {
    if (stats) *stats = st;
    return cur;
  }
  std::vector<int> targets;
  for (int i = 0; i < prog.num_vars(); ++i) {
    const auto role = prog.vars[i].role;
    if (std::find(opt.roles.begin(), opt.roles.end(), role) == opt.roles.end()) continue;
    if (cur.width(i) > 1e-9) targets.push_back(i);
  }
  LinearProgram lp = relax(prog, cur);
  int since = 0;
  for (const int v : targets) {
    if (elapsed(t0) > opt.time_limit) break;
    if (since >= opt.rebuild_every) {
      if (!interval_propagate(prog, cur)) break;
      lp = relax(prog, cur);
      since = 0;
    }
    ++since;
    for (const double sense : {1.0, -1.0}) {
      std::fill(lp.obj.begin(), lp.obj.end(), 0.0);
      lp.obj[v] = sense;
      const LPResult r = solve_simplex(lp);
      ++st.solved;
      if (r.status != LPStatus::Optimal) continue;
      const double val = sense * r.value;
      const double slack = 1e-7 * (1.0 + std::abs(val));
      if (sense > 0) {
        const double nl = val - slack;
        if (nl > cur.lo[v] + 1e-9 * (1.0 + std::abs(cur.lo[v]))) {
          cur.lo[v] = std::min(nl, cur.hi[v]);
        }
      } else {
        const double nh = val + slack;
        if (nh < cur.hi[v] - 1e-9 * (1.0 + std::abs(cur.hi[v]))) {
          cur.hi[v] = std::max(nh, cur.lo[v]);
        }
      }
      lp.col_lo[v] = cur.lo[v];
      lp.col_hi[v] = cur.hi[v];
    }
  }
  interval_propagate(prog, cur);
  for (int v = 0; v < prog.num_vars(); ++v) {
    const double eps = 1e-9;
    const bool tight = cur.lo[v] > b.lo[v] + eps * (1.0 + std::abs(b.lo[v])) ||
                       cur.hi[v] < b.hi[v] - eps * (1.0 + std::abs(b.hi[v]));
    if (!tight) continue;
    ++st.tightened;
    if (prog.vars[v].role == VarRole::Dual) ++st.duals_tightened;
  }
  if (stats) *stats = st;
  return cur;
}

IncumbentCallback forward_incumbent(const EncodedProgram& enc, const ParametricProblem& problem,
                                    const ParameterSet& pset, const OracleOptions& oracle) {
  const EncodedProgram* E = &enc;
  const ParametricProblem* P = &problem;
  const ParameterSet* S = &pset;
  return [E, P, S, oracle](const std::vector<double>& point, const Bounds& node,
                           bool root) -> std::optional<std::vector<double>> {
    const Layout& L = E->layout;
    const int d = S->dim();
    std::vector<Vec> xs;
    Vec x(d), lo(d), hi(d);
    for (int j = 0; j < d; ++j) {
      const int v = L.x[j];
      lo(j) = std::max(S->lower(j), node.lo[v]);
      hi(j) = std::min(S->upper(j), node.hi[v]);
      if (lo(j) > hi(j)) lo(j) = hi(j) = std::clamp(point[v], S->lower(j), S->upper(j));
      x(j) = std::clamp(point[v], lo(j), hi(j));
      if (S->is_discrete(j)) {
        const double mid = 0.5 * (S->lower(j) + S->upper(j));
        x(j) = x(j) < mid ? S->lower(j) : S->upper(j);
      }
    }
    xs.push_back(x);
    if (root) {
      Vec c = 0.5 * (lo + hi);
      for (int j = 0; j < d; ++j)
        if (S->is_discrete(j)) c(j) = S->lower(j);
      xs.push_back(c);
      if (d <= 6)
        for (int mask = 0; mask < (1 << d); ++mask) {
          Vec corner(d);
          for (int j = 0; j < d; ++j) corner(j) = (mask >> j) & 1 ? hi(j) : lo(j);
          xs.push_back(corner);
        }
    }
    RunOptions ro;
    ro.stop_on_infeasible = L.metric != PerformanceMetric::SubproblemFeasibility;
    std::optional<std::vector<double>> best;
    double best_val = -kInf;
    for (const Vec& xc : xs) {
      try {
        const IterateTrace tr = run_schedule(*P, L.schedule, xc, ro);
        Vec zstar;
        const Vec* zp = nullptr;
        if (L.metric == PerformanceMetric::Suboptimality) {
          const OracleResult o = reference_oracle(*P, xc, oracle);
          if (!o.feasible) continue;
          zstar = o.argmin;
          zp = &zstar;
        }
        std::vector<double> w = witness_from_trace(*E, *P, tr, zp);
        const double val = E->prog.objective_value(w);
        if (val > best_val) {
          best_val = val;
          best = std::move(w);
        }
      } catch (const std::exception&) {
      }
    }
    return best;
  };
}

std::vector<SequentialResult> verify_sequential(PerformanceMetric metric,
                                                const ParametricProblem& problem,
                                                const AlgorithmSchedule& schedule,
                                                const ParameterSet& pset,
                                                const InexactnessModel& inexact, int K_max,
                                                const EncoderOptions& enc_opt,
                                                const GlobalOptions& opt) {
  std::vector<SequentialResult> out;
  std::map<std::string, std::pair<double, double>> carry = opt.initial_bounds;
  int K0 = initial_point(schedule.init) ? 0 : 1;
  if (metric == PerformanceMetric::SubproblemFeasibility) K0 = std::max(K0, 1);
  for (int K = K0; K <= K_max; ++K) {
    const EncodedProgram enc = build_program(metric, problem, schedule, pset, inexact, K, enc_opt);
    GlobalOptions o = opt;
    o.callback = forward_incumbent(enc, problem, pset, oracle_for(problem));
    o.initial_bounds = carry;
    GlobalResult r = solve_global(enc.prog, o);
    for (int i = 0; i < enc.prog.num_vars(); ++i) {
      const auto& v = enc.prog.vars[i];
      if (v.metric) continue;
      auto it = carry.find(v.name);
      const double lo = r.root.lo[i], hi = r.root.hi[i];
      if (it == carry.end())
        carry[v.name] = {lo, hi};
      else
        it->second = {std::max(it->second.first, lo), std::min(it->second.second, hi)};
    }
    out.push_back(SequentialResult{K, std::move(r)});
  }
  return out;
}

}  // namespace scpv
