#include "scpv/oracle.hpp"

#include "scpv/qp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace scpv {

namespace {

double max_infeasibility(const FixedProblem& fp, const Vec& z) {
  double worst = 0.0;
  for (const auto& g : fp.ineq) worst = std::max(worst, g.eval(z));
  for (const auto& h : fp.eq) worst = std::max(worst, std::abs(h.eval(z)));
  return worst;
}

// Fixed coordinates (index, value) for every enumerated discrete pattern.
std::vector<std::vector<std::pair<int, double>>> discrete_patterns(const ParametricProblem& pb) {
  std::vector<std::vector<std::pair<int, double>>> out;
  auto enumerate_values = [&](const std::vector<int>& idx, double lo, double hi) {
    const int m = static_cast<int>(idx.size());
    if (m > 20) throw ScaleGuardError("discrete block too large to enumerate");
    for (long long mask = 0; mask < (1LL << m); ++mask) {
      std::vector<std::pair<int, double>> p;
      for (int t = 0; t < m; ++t) p.emplace_back(idx[t], (mask >> t) & 1 ? hi : lo);
      out.push_back(std::move(p));
    }
  };
  if (const auto* b = std::get_if<BinaryConstraint>(&pb.discrete)) {
    enumerate_values(b->indices, 0.0, 1.0);
  } else if (const auto* p = std::get_if<PlusMinusOneConstraint>(&pb.discrete)) {
    enumerate_values(p->indices, -1.0, 1.0);
  } else if (const auto* s = std::get_if<SparsityConstraint>(&pb.discrete)) {
    const int n = pb.n, k = std::min(s->k, pb.n);
    if (n > 20) throw ScaleGuardError("sparsity pattern too large to enumerate");
    // Supports of size exactly k cover all smaller ones.
    for (long long mask = 0; mask < (1LL << n); ++mask) {
      if (__builtin_popcountll(mask) != k) continue;
      std::vector<std::pair<int, double>> pat;
      for (int j = 0; j < n; ++j)
        if (!((mask >> j) & 1)) pat.emplace_back(j, 0.0);
      out.push_back(std::move(pat));
    }
  } else {
    out.emplace_back();
  }
  return out;
}

bool psd(const Mat& P) {
  if (P.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-10 * (1.0 + P.cwiseAbs().maxCoeff());
}

Mat sub(const Mat& P, const std::vector<int>& r, const std::vector<int>& c) {
  Mat out(r.size(), c.size());
  for (size_t i = 0; i < r.size(); ++i)
    for (size_t j = 0; j < c.size(); ++j) out(i, j) = P(r[i], c[j]);
  return out;
}

struct Candidate {
  double value = std::numeric_limits<double>::infinity();
  Vec z;
};

void consider(const FixedProblem& fp, const Vec& z, double feas_tol, Candidate& best) {
  if (max_infeasibility(fp, z) > feas_tol) return;
  const double v = fp.eval_objective(z);
  if (v < best.value) {
    best.value = v;
    best.z = z;
  }
}

// Restricted problem is a convex QP in z_C with z_F fixed.
bool convex_continuation(const FixedProblem& fp, const std::vector<int>& C) {
  if (!fp.abs_terms.empty()) return false;
  if (!psd(sub(fp.objective.P, C, C))) return false;
  for (const auto& g : fp.ineq)
    if (sub(g.P, C, C).cwiseAbs().maxCoeff() > 0.0) return false;
  for (const auto& h : fp.eq)
    if (sub(h.P, C, C).cwiseAbs().maxCoeff() > 0.0) return false;
  return true;
}

void solve_convex(const FixedProblem& fp, const Vec& zfix, const std::vector<int>& C,
                  const OracleOptions& opt, Candidate& best) {
  const int nc = static_cast<int>(C.size());
  // Linear part of a fixed quadratic restricted to C, given zfix on the other coordinates.
  auto restrict = [&](const FixedQuadratic& q, Vec& lin, double& cst) {
    const Vec g = q.P * zfix + q.q;  // gradient at zfix
    lin.resize(nc);
    for (int a = 0; a < nc; ++a) lin(a) = g(C[a]);
    cst = q.eval(zfix);
  };
  StandardQP qp;
  qp.P = sub(fp.objective.P, C, C);
  double cst;
  restrict(fp.objective, qp.c, cst);
  std::vector<Vec> rows;
  std::vector<double> rhs;
  std::vector<char> eq;
  Vec lin;
  for (const auto& g : fp.ineq) {
    restrict(g, lin, cst);
    // g(zfix + d) = cst + lin'd for d supported on C, zfix_C = 0.
    rows.push_back(lin);
    rhs.push_back(-cst);
    eq.push_back(0);
  }
  for (const auto& h : fp.eq) {
    restrict(h, lin, cst);
    rows.push_back(lin);
    rhs.push_back(-cst);
    eq.push_back(1);
    rows.push_back(-lin);
    rhs.push_back(cst);
    eq.push_back(1);
  }
  for (int a = 0; a < nc; ++a) {
    Vec e = Vec::Zero(nc);
    e(a) = 1.0;
    rows.push_back(e);
    rhs.push_back(fp.z_bounds.upper(C[a]));
    eq.push_back(0);
    rows.push_back(-e);
    rhs.push_back(-fp.z_bounds.lower(C[a]));
    eq.push_back(0);
  }
  qp.A.resize(rows.size(), nc);
  qp.b.resize(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    qp.A.row(r) = rows[r].transpose();
    qp.b(r) = rhs[r];
  }
  qp.is_eq = eq;
  const QPSolution sol = solve_qp(qp);
  if (sol.status != QPStatus::Optimal) return;
  Vec z = zfix;
  for (int a = 0; a < nc; ++a) z(C[a]) = sol.u(a);
  consider(fp, z, std::max(opt.feas_tol, 1e-8), best);
}

void grid_search(const FixedProblem& fp, const Vec& zfix, const std::vector<int>& C,
                 const OracleOptions& opt, Candidate& best) {
  const int nc = static_cast<int>(C.size());
  if (nc == 0) {
    consider(fp, zfix, opt.feas_tol, best);
    return;
  }
  if (nc > opt.max_grid_dim) throw ScaleGuardError("continuous block too large for the grid");
  Vec lo(nc), hi(nc);
  for (int a = 0; a < nc; ++a) {
    lo(a) = fp.z_bounds.lower(C[a]);
    hi(a) = fp.z_bounds.upper(C[a]);
  }
  auto sweep = [&](const Vec& l, const Vec& h, const std::vector<int>& pts, Candidate& out) {
    long long total = 1;
    for (int p : pts) total *= p;
    if (total > opt.max_points) throw ScaleGuardError("grid exceeds the point budget");
    std::vector<int> idx(nc, 0);
    Vec z = zfix;
    for (long long t = 0; t < total; ++t) {
      for (int a = 0; a < nc; ++a)
        z(C[a]) = pts[a] == 1 ? l(a) : l(a) + (h(a) - l(a)) * idx[a] / (pts[a] - 1);
      consider(fp, z, opt.feas_tol, out);
      for (int a = 0; a < nc; ++a) {
        if (++idx[a] < pts[a]) break;
        idx[a] = 0;
      }
    }
  };
  std::vector<int> pts(nc);
  for (int a = 0; a < nc; ++a)
    pts[a] = std::max(1, static_cast<int>(std::ceil((hi(a) - lo(a)) / opt.resolution - 1e-9)) + 1);
  Candidate local;
  sweep(lo, hi, pts, local);
  if (!std::isfinite(local.value)) return;
  Vec step(nc);
  for (int a = 0; a < nc; ++a) step(a) = pts[a] > 1 ? (hi(a) - lo(a)) / (pts[a] - 1) : 0.0;
  const int per_dim = 21;  // spacing / 10 per level
  for (int level = 0; level < opt.refine_levels; ++level) {
    Vec l(nc), h(nc);
    for (int a = 0; a < nc; ++a) {
      const double c = local.z(C[a]);
      l(a) = std::max(lo(a), c - step(a));
      h(a) = std::min(hi(a), c + step(a));
    }
    std::vector<int> p(nc, per_dim);
    for (int a = 0; a < nc; ++a)
      if (h(a) <= l(a)) p[a] = 1;
    sweep(l, h, p, local);
    for (int a = 0; a < nc; ++a) step(a) = 2.0 * step(a) / (per_dim - 1);
  }
  if (local.value < best.value) best = local;
}

}  // namespace

OracleResult reference_oracle(const ParametricProblem& problem, const Vec& x,
                              const OracleOptions& opt) {
  const FixedProblem fp = substitute_parameter(problem, x);
  Candidate best;
  for (const auto& pattern : discrete_patterns(problem)) {
    Vec zfix = Vec::Zero(problem.n);
    std::vector<char> fixed(problem.n, 0);
    for (const auto& [j, v] : pattern) {
      zfix(j) = v;
      fixed[j] = 1;
    }
    std::vector<int> C;
    for (int j = 0; j < problem.n; ++j)
      if (!fixed[j]) C.push_back(j);
    if (C.empty())
      consider(fp, zfix, opt.feas_tol, best);
    else if (convex_continuation(fp, C))
      solve_convex(fp, zfix, C, opt, best);
    else
      grid_search(fp, zfix, C, opt, best);
  }
  OracleResult out;
  out.feasible = std::isfinite(best.value);
  out.value = best.value;
  out.argmin = best.z;
  return out;
}

OracleOptions oracle_for(const ParametricProblem& problem, long long budget) {
  OracleOptions opt;
  std::vector<char> disc(problem.n, 0);
  if (!std::holds_alternative<SparsityConstraint>(problem.discrete))
    for (int j : discrete_indices(problem)) disc[j] = 1;
  double log_vol = 0.0;
  int nc = 0;
  for (int j = 0; j < problem.n; ++j) {
    const double w = problem.z_bounds.upper(j) - problem.z_bounds.lower(j);
    if (disc[j] || w <= 0) continue;
    log_vol += std::log(w);
    ++nc;
  }
  if (nc == 0) return opt;
  const double per_dim = std::pow(static_cast<double>(budget), 1.0 / nc) - 1.0;
  opt.resolution = std::max(opt.resolution, std::exp(log_vol / nc) / std::max(1.0, per_dim));
  return opt;
}

}  // namespace scpv
