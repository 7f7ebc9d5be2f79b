#include "scpv/qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scpv {

namespace {

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Row form used internally: lo <= A u <= hi, where hi = b and lo = -inf or b for merged
// equality pairs. `origin[k]` is the first StandardQP row of merged row k.
struct RowForm {
  Mat A;
  Vec lo, hi;
  std::vector<int> origin;
  std::vector<char> merged;
};

RowForm merge_rows(const StandardQP& qp) {
  const int m = qp.num_rows();
  std::vector<int> keep;
  std::vector<char> merged;
  for (int i = 0; i < m; ++i) {
    const bool flagged = i < static_cast<int>(qp.is_eq.size()) && qp.is_eq[i];
    if (flagged && i + 1 < m && qp.is_eq[i + 1] &&
        (qp.A.row(i) + qp.A.row(i + 1)).cwiseAbs().maxCoeff() <= 1e-14 &&
        std::abs(qp.b(i) + qp.b(i + 1)) <= 1e-14 * (1.0 + std::abs(qp.b(i)))) {
      keep.push_back(i);
      merged.push_back(1);
      ++i;
      continue;
    }
    keep.push_back(i);
    merged.push_back(0);
  }
  RowForm f;
  const int k = static_cast<int>(keep.size());
  f.A.resize(k, qp.num_vars());
  f.lo.resize(k);
  f.hi.resize(k);
  for (int r = 0; r < k; ++r) {
    f.A.row(r) = qp.A.row(keep[r]);
    f.hi(r) = qp.b(keep[r]);
    f.lo(r) = merged[r] ? qp.b(keep[r]) : -kInf;
  }
  f.origin = keep;
  f.merged = merged;
  return f;
}

// Map multipliers of the merged rows back to nonnegative multipliers of the original rows.
Vec unmerge(const RowForm& f, const Vec& lam, int m) {
  Vec y = Vec::Zero(m);
  for (int r = 0; r < static_cast<int>(f.origin.size()); ++r) {
    const int i = f.origin[r];
    if (f.merged[r]) {
      y(i) = std::max(lam(r), 0.0);
      y(i + 1) = std::max(-lam(r), 0.0);
    } else {
      y(i) = std::max(lam(r), 0.0);
    }
  }
  return y;
}

QPSolution finish(const StandardQP& qp, Vec u, Vec y, QPStatus status, int iters) {
  QPSolution sol;
  sol.s = (qp.b - qp.A * u).cwiseMax(0.0);
  sol.u = std::move(u);
  sol.y = std::move(y);
  sol.status = status;
  sol.iterations = iters;
  sol.residuals = kkt_residuals(qp, sol.u, sol.s, sol.y);
  return sol;
}

// Active-set solve: starting from a guessed active set, iterate primal-dual active-set
// updates until a point satisfying the KKT conditions to `tol` is found.
bool polish(const StandardQP& qp, const RowForm& f, const Vec& u0, const Vec& lam0, double tol,
            QPSolution& out) {
  const int n = qp.num_vars();
  const int k = static_cast<int>(f.origin.size());
  std::vector<char> active(k, 0);
  const Vec z0 = f.A * u0;
  for (int r = 0; r < k; ++r)
    active[r] = f.merged[r] || (f.hi(r) - z0(r) < lam0(r)) || (f.hi(r) - z0(r) < 1e-9);
  for (int round = 0; round < 25; ++round) {
    std::vector<int> act;
    for (int r = 0; r < k; ++r)
      if (active[r]) act.push_back(r);
    const int na = static_cast<int>(act.size());
    const double delta = 1e-10;
    Mat K = Mat::Zero(n + na, n + na);
    K.topLeftCorner(n, n) = qp.P;
    Vec rhs(n + na);
    rhs.head(n) = -qp.c;
    for (int a = 0; a < na; ++a) {
      K.block(n + a, 0, 1, n) = f.A.row(act[a]);
      K.block(0, n + a, n, 1) = f.A.row(act[a]).transpose();
      rhs(n + a) = f.hi(act[a]);
    }
    Mat Kreg = K;
    Kreg.topLeftCorner(n, n).diagonal().array() += delta;
    if (na) Kreg.bottomRightCorner(na, na).diagonal().array() -= delta;
    Eigen::PartialPivLU<Mat> lu(Kreg);
    Vec sol = lu.solve(rhs);
    for (int it = 0; it < 8; ++it) {
      const Vec res = rhs - K * sol;
      if (inf_norm(res) < 1e-15 * (1.0 + inf_norm(rhs))) break;
      sol += lu.solve(res);
    }
    if (!sol.allFinite()) return false;
    const Vec u = sol.head(n);
    Vec lam = Vec::Zero(k);
    for (int a = 0; a < na; ++a) lam(act[a]) = sol(n + a);
    const Vec z = f.A * u;
    bool changed = false;
    // Drop the most negative multiplier, add the most violated row.
    int worst_neg = -1, worst_viol = -1;
    double neg = -tol, viol = tol;
    for (int r = 0; r < k; ++r) {
      if (f.merged[r]) continue;
      if (active[r] && lam(r) < neg) {
        neg = lam(r);
        worst_neg = r;
      }
      const double v = z(r) - f.hi(r);
      if (!active[r] && v > viol * (1.0 + std::abs(f.hi(r)))) {
        viol = v;
        worst_viol = r;
      }
    }
    if (worst_viol >= 0) {
      active[worst_viol] = 1;
      changed = true;
    }
    if (worst_neg >= 0) {
      active[worst_neg] = 0;
      changed = true;
    }
    if (!changed) {
      QPSolution cand = finish(qp, u, unmerge(f, lam, qp.num_rows()), QPStatus::Optimal, 0);
      if (cand.residuals.max() <= tol * (1.0 + inf_norm(qp.b) + inf_norm(qp.c))) {
        out = std::move(cand);
        return true;
      }
      return false;
    }
  }
  return false;
}

}  // namespace

void StandardQP::check() const {
  const int n = num_vars();
  const int m = num_rows();
  if (P.rows() != n || P.cols() != n) throw DimensionError("P must be n x n");
  if (A.rows() != m || A.cols() != n) throw DimensionError("A must be m x n");
  if (!is_eq.empty() && static_cast<int>(is_eq.size()) != m)
    throw DimensionError("is_eq must have one flag per row");
  if (!P.allFinite() || !c.allFinite() || !A.allFinite() || !b.allFinite())
    throw std::invalid_argument("QP data must be finite");
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + P.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("P must be symmetric");
}

double KKTResiduals::max() const { return std::max({primal, dual, comp, sign}); }

std::string to_string(QPStatus s) {
  switch (s) {
    case QPStatus::Optimal: return "optimal";
    case QPStatus::PrimalInfeasible: return "primal_infeasible";
    case QPStatus::DualInfeasible: return "dual_infeasible";
    case QPStatus::MaxIter: return "max_iter";
  }
  return "unknown";
}


double QPSolution::primal_objective(const StandardQP& qp) const {
  return 0.5 * u.dot(qp.P * u) + qp.c.dot(u);
}

double QPSolution::dual_objective(const StandardQP& qp) const {
  return -0.5 * u.dot(qp.P * u) - qp.b.dot(y);
}

KKTResiduals kkt_residuals(const StandardQP& qp, const Vec& u, const Vec& s, const Vec& y) {
  KKTResiduals r;
  r.primal = inf_norm(qp.A * u + s - qp.b);
  r.dual = inf_norm(qp.P * u + qp.A.transpose() * y + qp.c);
  r.comp = std::abs(s.dot(y));
  r.sign = std::max(inf_norm(s.cwiseMin(0.0)), inf_norm(y.cwiseMin(0.0)));
  return r;
}

Vec farkas_certificate(const Mat& A, const Vec& b, double tol) {
  // min b'y  s.t.  A'y = 0, 1'y = 1, y >= 0.
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (m == 0) return {};
  LinearProgram lp;
  for (int i = 0; i < m; ++i) lp.add_col(0.0, kInf, b(i));
  for (int j = 0; j < n; ++j) {
    SparseRow row;
    for (int i = 0; i < m; ++i)
      if (A(i, j) != 0.0) row.terms.emplace_back(i, A(i, j));
    if (row.terms.empty()) continue;
    row.lo = row.hi = 0.0;
    lp.rows.push_back(std::move(row));
  }
  SparseRow sum;
  for (int i = 0; i < m; ++i) sum.terms.emplace_back(i, 1.0);
  sum.lo = sum.hi = 1.0;
  lp.rows.push_back(std::move(sum));
  const LPResult res = solve_simplex(lp);
  if (res.status != LPStatus::Optimal) return {};
  Vec y = Eigen::Map<const Vec>(res.x.data(), m);
  y = y.cwiseMax(0.0);
  y /= y.sum();
  const double scale = 1.0 + inf_norm(b);
  if (b.dot(y) >= -tol * scale) return {};
  return y;
}

namespace {

QPSolution solve_qp_impl(const StandardQP& qp, const QPSettings& settings) {
  const int n = qp.num_vars();
  const int m = qp.num_rows();
  const RowForm f = merge_rows(qp);
  const int k = static_cast<int>(f.origin.size());
  const double tol = settings.tol;

  Vec u = Vec::Zero(n), z = Vec::Zero(k), lam = Vec::Zero(k);
  Vec rho_vec(k);
  double rho = settings.rho;
  auto set_rho = [&] {
    for (int r = 0; r < k; ++r) rho_vec(r) = f.merged[r] ? 1e3 * rho : rho;
  };
  set_rho();
  const double sigma = settings.sigma;
  const double alpha = settings.alpha;
  Eigen::LDLT<Mat> ldlt;
  auto factor = [&] {
    Mat Kmat = qp.P;
    Kmat.diagonal().array() += sigma;
    Kmat += f.A.transpose() * rho_vec.asDiagonal() * f.A;
    ldlt.compute(Kmat);
  };
  factor();

  const double feps = 1e-6;
  Vec u_prev = u, lam_prev = lam;
  int it = 0;
  for (; it < settings.max_iter; ++it) {
    const Vec rhs = sigma * u - qp.c + f.A.transpose() * (rho_vec.cwiseProduct(z) - lam);
    const Vec ut = ldlt.solve(rhs);
    const Vec zt = f.A * ut;
    const Vec u_new = alpha * ut + (1.0 - alpha) * u;
    const Vec zr = alpha * zt + (1.0 - alpha) * z;
    Vec z_new = zr + lam.cwiseQuotient(rho_vec);
    for (int r = 0; r < k; ++r) z_new(r) = std::min(std::max(z_new(r), f.lo(r)), f.hi(r));
    lam += rho_vec.cwiseProduct(zr - z_new);
    u = u_new;
    z = z_new;

    if ((it + 1) % 25 != 0) continue;
    const Vec Au = f.A * u;
    const double rp = inf_norm(Au - z);
    const Vec Pu = qp.P * u;
    const Vec Aty = f.A.transpose() * lam;
    const double rd = inf_norm(Pu + qp.c + Aty);

    if (settings.polish && (rp < 1e-3 * (1.0 + inf_norm(qp.b)) || (it + 1) % 200 == 0)) {
      QPSolution out;
      if (polish(qp, f, u, lam.cwiseMax(0.0), tol, out)) {
        out.iterations = it + 1;
        return out;
      }
    }
    if (rp <= tol && rd <= tol) {
      QPSolution out = finish(qp, u, unmerge(f, lam, m), QPStatus::Optimal, it + 1);
      if (out.residuals.max() <= 10 * tol * (1.0 + inf_norm(qp.b) + inf_norm(qp.c))) return out;
    }

    // Infeasibility tests on successive differences.
    const Vec dlam = lam - lam_prev;
    const double nl = inf_norm(dlam);
    if (nl > 1e-12) {
      double support = 0.0;
      for (int r = 0; r < k; ++r)
        support += f.merged[r] ? f.hi(r) * dlam(r) : f.hi(r) * std::max(dlam(r), 0.0);
      if (inf_norm(f.A.transpose() * dlam) <= feps * nl && support < -feps * nl) {
        Vec cert = farkas_certificate(qp.A, qp.b, tol);
        if (cert.size()) {
          QPSolution out;
          out.u = u;
          out.s = Vec::Zero(m);
          out.y = cert;
          out.status = QPStatus::PrimalInfeasible;
          out.iterations = it + 1;
          return out;
        }
      }
    }
    const Vec du = u - u_prev;
    const double nu = inf_norm(du);
    if (nu > 1e-12) {
      const Vec Adu = f.A * du;
      bool rec = inf_norm(qp.P * du) <= feps * nu && qp.c.dot(du) < -feps * nu;
      for (int r = 0; r < k && rec; ++r) {
        if (f.merged[r]) rec = std::abs(Adu(r)) <= feps * nu;
        else rec = Adu(r) <= feps * nu;
      }
      if (rec) {
        QPSolution out;
        out.u = du / nu;
        out.s = Vec::Zero(m);
        out.y = Vec::Zero(m);
        out.status = QPStatus::DualInfeasible;
        out.iterations = it + 1;
        return out;
      }
    }
    u_prev = u;
    lam_prev = lam;

    // Adapt the penalty.
    const double pscale = std::max(inf_norm(Au), inf_norm(z)) + 1e-12;
    const double dscale = std::max({inf_norm(Pu), inf_norm(Aty), inf_norm(qp.c)}) + 1e-12;
    const double ratio = std::sqrt((rp / pscale) / (rd / dscale + 1e-30));
    if (std::isfinite(ratio) && (ratio > 5.0 || ratio < 0.2)) {
      rho = std::clamp(rho * ratio, 1e-6, 1e6);
      set_rho();
      factor();
    }
  }
  Vec cert = farkas_certificate(qp.A, qp.b, tol);
  if (cert.size()) {
    QPSolution out;
    out.u = u;
    out.s = Vec::Zero(m);
    out.y = cert;
    out.status = QPStatus::PrimalInfeasible;
    out.iterations = it;
    return out;
  }
  return finish(qp, u, unmerge(f, lam, m), QPStatus::MaxIter, it);
}

}  // namespace

QPSolution solve_qp(const StandardQP& qp, const QPSettings& settings) {
  qp.check();
  const int m = qp.num_rows();
  // Rows with A_i = 0 are decided up front: infeasible if b_i < 0, otherwise dropped.
  std::vector<int> keep;
  for (int i = 0; i < m; ++i) {
    if (qp.A.row(i).cwiseAbs().maxCoeff() > 0.0) {
      keep.push_back(i);
      continue;
    }
    if (qp.b(i) < -settings.tol) {
      QPSolution out;
      out.u = Vec::Zero(qp.num_vars());
      out.s = Vec::Zero(m);
      out.y = Vec::Zero(m);
      out.y(i) = 1.0;
      out.status = QPStatus::PrimalInfeasible;
      return out;
    }
  }
  if (static_cast<int>(keep.size()) == m) return solve_qp_impl(qp, settings);
  StandardQP red;
  red.P = qp.P;
  red.c = qp.c;
  red.A.resize(keep.size(), qp.num_vars());
  red.b.resize(keep.size());
  for (size_t r = 0; r < keep.size(); ++r) {
    red.A.row(r) = qp.A.row(keep[r]);
    red.b(r) = qp.b(keep[r]);
    if (!qp.is_eq.empty()) red.is_eq.push_back(qp.is_eq[keep[r]]);
  }
  const QPSolution rs = solve_qp_impl(red, settings);
  QPSolution out;
  out.u = rs.u;
  out.status = rs.status;
  out.iterations = rs.iterations;
  out.y = Vec::Zero(m);
  for (size_t r = 0; r < keep.size(); ++r) out.y(keep[r]) = rs.y(r);
  if (rs.status == QPStatus::PrimalInfeasible || rs.status == QPStatus::DualInfeasible) {
    out.s = Vec::Zero(m);
    return out;
  }
  out.s = (qp.b - qp.A * out.u).cwiseMax(0.0);
  out.residuals = kkt_residuals(qp, out.u, out.s, out.y);
  return out;
}

QPSolution solve_qp(const StandardQP& qp, double tol, int max_iter) {
  QPSettings s;
  s.tol = tol;
  s.max_iter = max_iter;
  return solve_qp(qp, s);
}

QPSolution solve_lp(const Vec& c, const Mat& A, const Vec& b, const VarBounds& bounds,
                    double tol) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(A.rows());
  if (A.cols() != n || b.size() != m) throw DimensionError("solve_lp: A must be m x n");
  if ((bounds.lower.size() && bounds.lower.size() != n) ||
      (bounds.upper.size() && bounds.upper.size() != n))
    throw DimensionError("solve_lp: bounds must have n entries");
  auto lower = [&](int j) { return bounds.lower.size() ? bounds.lower(j) : -kInf; };
  auto upper = [&](int j) { return bounds.upper.size() ? bounds.upper(j) : kInf; };

  // Folded system, used for residuals and certificates.
  std::vector<int> lo_rows, hi_rows;
  for (int j = 0; j < n; ++j)
    if (std::isfinite(lower(j))) lo_rows.push_back(j);
  for (int j = 0; j < n; ++j)
    if (std::isfinite(upper(j))) hi_rows.push_back(j);
  const int mf = m + static_cast<int>(lo_rows.size() + hi_rows.size());
  StandardQP full;
  full.P = Mat::Zero(n, n);
  full.c = c;
  full.A = Mat::Zero(mf, n);
  full.b = Vec::Zero(mf);
  full.A.topRows(m) = A;
  full.b.head(m) = b;
  int r = m;
  for (int j : lo_rows) {
    full.A(r, j) = -1.0;
    full.b(r++) = -lower(j);
  }
  for (int j : hi_rows) {
    full.A(r, j) = 1.0;
    full.b(r++) = upper(j);
  }

  LinearProgram lp;
  for (int j = 0; j < n; ++j) lp.add_col(lower(j), upper(j), c(j));
  for (int i = 0; i < m; ++i) {
    SparseRow row;
    for (int j = 0; j < n; ++j)
      if (A(i, j) != 0.0) row.terms.emplace_back(j, A(i, j));
    row.hi = b(i);
    lp.rows.push_back(std::move(row));
  }
  SimplexOptions opt;
  opt.feas_tol = std::min(1e-9, tol);
  const LPResult res = solve_simplex(lp, opt);
  QPSolution out;
  out.iterations = res.iterations;
  if (res.status == LPStatus::Optimal) {
    out.u = Eigen::Map<const Vec>(res.x.data(), n);
    out.y = Vec::Zero(mf);
    for (int i = 0; i < m; ++i) out.y(i) = std::max(-res.row_dual[i], 0.0);
    r = m;
    for (int j : lo_rows) out.y(r++) = std::max(res.reduced_cost[j], 0.0);
    for (int j : hi_rows) out.y(r++) = std::max(-res.reduced_cost[j], 0.0);
    out.s = (full.b - full.A * out.u).cwiseMax(0.0);
    out.status = QPStatus::Optimal;
    out.residuals = kkt_residuals(full, out.u, out.s, out.y);
    return out;
  }
  if (res.status == LPStatus::Unbounded) {
    out.status = QPStatus::DualInfeasible;
    out.u = Vec::Zero(n);
    out.s = Vec::Zero(mf);
    out.y = Vec::Zero(mf);
    return out;
  }
  Vec cert = farkas_certificate(full.A, full.b, tol);
  out.u = Vec::Zero(n);
  out.s = Vec::Zero(mf);
  if (cert.size()) {
    out.status = QPStatus::PrimalInfeasible;
    out.y = cert;
  } else {
    out.status = QPStatus::MaxIter;
    out.y = Vec::Zero(mf);
  }
  return out;
}

}  // namespace scpv
