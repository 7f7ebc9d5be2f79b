#include "scpv/steps.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace scpv {

namespace {

// Kx + c.
template <class T>
std::vector<T> lin_coef(const QuadraticForm& q, const std::vector<T>& x) {
  const int n = q.n();
  std::vector<T> out(n);
  for (int i = 0; i < n; ++i) {
    T v = T(q.c(i));
    for (int j = 0; j < q.K.cols(); ++j)
      if (q.K(i, j) != 0.0) v += x[j] * q.K(i, j);
    out[i] = v;
  }
  return out;
}

// r'x + r0.
template <class T>
T offset(const QuadraticForm& q, const std::vector<T>& x) {
  T v = T(q.r0);
  for (int j = 0; j < q.r.size(); ++j)
    if (q.r(j) != 0.0) v += x[j] * q.r(j);
  return v;
}

template <class T>
std::vector<T> matvec(const Mat& P, const std::vector<T>& z) {
  std::vector<T> out(P.rows(), T(0.0));
  for (int i = 0; i < P.rows(); ++i)
    for (int j = 0; j < P.cols(); ++j)
      if (P(i, j) != 0.0) out[i] += z[j] * P(i, j);
  return out;
}

template <class T>
T quad(const Mat& P, const std::vector<T>& z) {
  T v = T(0.0);
  for (int i = 0; i < P.rows(); ++i)
    for (int j = 0; j < P.cols(); ++j)
      if (P(i, j) != 0.0) v += (z[i] * z[j]) * P(i, j);
  return v;
}

template <class T>
struct Builder {
  StepQP<T> qp;
  int nu = 0;

  void init(int num_u) {
    nu = num_u;
    qp.P = Mat::Zero(nu, nu);
    qp.c.assign(nu, T(0.0));
    qp.aux.assign(nu, 0);
    qp.ubound.assign(nu, UBound{});
  }
  // row . u <= rhs; returns the row index.
  int row(std::vector<T> a, T rhs, bool eq_flag = false) {
    qp.A.push_back(std::move(a));
    qp.b.push_back(std::move(rhs));
    qp.is_eq.push_back(eq_flag ? 1 : 0);
    return static_cast<int>(qp.b.size()) - 1;
  }
  // row . u = rhs as the pair (row, rhs), (-row, -rhs).
  int eq(const std::vector<T>& a, const T& rhs) {
    std::vector<T> neg(a.size());
    for (size_t i = 0; i < a.size(); ++i) neg[i] = a[i] * -1.0;
    const int r = row(a, rhs, true);
    row(std::move(neg), rhs * -1.0, true);
    return r;
  }
  std::vector<T> zeros() const { return std::vector<T>(nu, T(0.0)); }
};

void require_affine(const QuadraticForm& g, const char* what) {
  if (!g.is_affine()) throw std::invalid_argument(std::string(what) + " needs affine constraints");
}

// Linearized inequality: grad(z_k)'z <= 1/2 z_k'P z_k - r'x - r0 (exact for affine g, an
// upper model for concave g).
template <class T>
void linear_row_parts(const QuadraticForm& g, const std::vector<T>& x, const std::vector<T>& zk,
                      std::vector<T>& a, T& rhs) {
  a = lin_coef(g, x);
  rhs = offset(g, x) * -1.0;
  if (!g.is_affine()) {
    const std::vector<T> Pz = matvec(g.P, zk);
    for (size_t i = 0; i < a.size(); ++i) a[i] += Pz[i];
    rhs += quad(g.P, zk) * 0.5;
  }
}

template <class T>
void check_concave(const QuadraticForm& g) {
  if (g.is_affine()) return;
  const DCSplit s = dc_split(g.P);
  if (s.pos.cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("inequality with a convex quadratic part is not supported");
}

// Problem inequalities (affine) and equalities over the z-block of u starting at column 0.
template <class T>
void add_problem_rows(Builder<T>& B, const ParametricProblem& pb, const std::vector<T>& x,
                      const char* what) {
  for (const auto& g : pb.ineq) {
    require_affine(g, what);
    std::vector<T> a;
    T rhs;
    linear_row_parts(g, x, std::vector<T>(pb.n, T(0.0)), a, rhs);
    a.resize(B.nu, T(0.0));
    B.row(std::move(a), rhs);
  }
  for (const auto& h : pb.eq) {
    std::vector<T> a = lin_coef(h, x);
    a.resize(B.nu, T(0.0));
    B.eq(a, offset(h, x) * -1.0);
  }
}

template <class T>
void identity_z(Builder<T>& B, int n) {
  B.qp.z_from_u.resize(n);
  for (int j = 0; j < n; ++j) {
    B.qp.z_from_u[j] = j;
    B.qp.ubound[j] = UBound{UBound::Z, j, 1};
  }
}

template <class T>
StepQP<T> build_convexified(const ParametricProblem& pb, const std::vector<T>& x,
                            const IterState<T>& in, double rho, double tau, bool ccp) {
  const int n = pb.n;
  const auto& zk = in.z;
  std::vector<int> concave;
  for (int i = 0; i < static_cast<int>(pb.ineq.size()); ++i) {
    check_concave<T>(pb.ineq[i]);
    if (ccp && !pb.ineq[i].is_affine()) concave.push_back(i);
  }
  if (!pb.abs_terms.empty()) throw std::invalid_argument("abs terms need the prox-linear step");
  const int ns = static_cast<int>(concave.size());
  Builder<T> B;
  B.init(n + ns);
  const DCSplit dc = dc_split(pb.objective.P);
  B.qp.P.topLeftCorner(n, n) = dc.pos;
  std::vector<T> c = lin_coef(pb.objective, x);
  const std::vector<T> Pnz = matvec(dc.neg, zk);
  for (int j = 0; j < n; ++j) B.qp.c[j] = c[j] - Pnz[j];
  for (int q = 0; q < ns; ++q) B.qp.c[n + q] = T(tau);
  identity_z(B, n);

  int q = 0;
  for (int i = 0; i < static_cast<int>(pb.ineq.size()); ++i) {
    std::vector<T> a;
    T rhs;
    linear_row_parts(pb.ineq[i], x, zk, a, rhs);
    a.resize(B.nu, T(0.0));
    const bool slack = q < ns && concave[q] == i;
    if (slack) a[n + q] = T(-1.0);
    const int r = B.row(std::move(a), rhs);
    if (slack) {
      B.qp.aux[n + q] = 1;
      B.qp.ubound[n + q] = UBound{UBound::Row, r, 1};
      ++q;
    }
  }
  for (const auto& h : pb.eq) {
    require_affine(h, "equality");
    std::vector<T> a = lin_coef(h, x);
    a.resize(B.nu, T(0.0));
    B.eq(a, offset(h, x) * -1.0);
  }
  if (!ccp) {
    for (int j = 0; j < n; ++j) {
      std::vector<T> a = B.zeros();
      a[j] = T(1.0);
      B.row(a, zk[j] + T(rho));
      a[j] = T(-1.0);
      B.row(a, zk[j] * -1.0 + T(rho));
    }
  }
  for (int s = 0; s < ns; ++s) {
    std::vector<T> a = B.zeros();
    a[n + s] = T(-1.0);
    B.row(std::move(a), T(0.0));
  }
  return std::move(B.qp);
}

template <class T>
StepQP<T> build_prox(const ParametricProblem& pb, const std::vector<T>& x, const IterState<T>& in,
                     double rho) {
  const int n = pb.n;
  const int m = static_cast<int>(pb.abs_terms.size());
  const auto& zk = in.z;
  Builder<T> B;
  B.init(n + 2 * m);
  B.qp.P.topLeftCorner(n, n) = pb.objective.P + rho * Mat::Identity(n, n);
  const std::vector<T> c = lin_coef(pb.objective, x);
  for (int j = 0; j < n; ++j) B.qp.c[j] = c[j] - zk[j] * rho;
  for (int t = 0; t < m; ++t) {
    B.qp.c[n + t] = T(pb.abs_terms[t].weight);
    B.qp.c[n + m + t] = T(pb.abs_terms[t].weight);
    B.qp.aux[n + t] = B.qp.aux[n + m + t] = 1;
  }
  identity_z(B, n);
  add_problem_rows(B, pb, x, "prox-linear step");
  for (int t = 0; t < m; ++t) {
    std::vector<T> a;
    T rhs;
    linear_row_parts(pb.abs_terms[t].inner, x, zk, a, rhs);
    a.resize(B.nu, T(0.0));
    a[n + t] = T(-1.0);
    a[n + m + t] = T(1.0);
    const int r = B.eq(a, rhs);
    B.qp.ubound[n + t] = UBound{UBound::Row, r, 1};
    B.qp.ubound[n + m + t] = UBound{UBound::Row, r, -1};
  }
  for (int t = 0; t < 2 * m; ++t) {
    std::vector<T> a = B.zeros();
    a[n + t] = T(-1.0);
    B.row(std::move(a), T(0.0));
  }
  return std::move(B.qp);
}

template <class T>
StepQP<T> build_relax(const ParametricProblem& pb, const std::vector<T>& x, double lambda) {
  const int n = pb.n;
  const bool sparse = std::holds_alternative<SparsityConstraint>(pb.discrete);
  Builder<T> B;
  B.init(sparse ? 2 * n : n);
  B.qp.P.topLeftCorner(n, n) = pb.objective.P;
  const std::vector<T> c = lin_coef(pb.objective, x);
  for (int j = 0; j < n; ++j) B.qp.c[j] = c[j];
  identity_z(B, n);
  add_problem_rows(B, pb, x, "relax step");
  if (sparse) {
    B.qp.abs_from_u.resize(n);
    for (int j = 0; j < n; ++j) {
      B.qp.c[n + j] = T(lambda);
      B.qp.aux[n + j] = 1;
      B.qp.ubound[n + j] = UBound{UBound::Abs, j, 1};
      B.qp.abs_from_u[j] = n + j;
      std::vector<T> a = B.zeros();
      a[j] = T(1.0);
      a[n + j] = T(-1.0);
      B.row(a, T(0.0));
      a[j] = T(-1.0);
      B.row(std::move(a), T(0.0));
    }
  } else if (has_discrete(pb.discrete)) {
    const bool pm1 = std::holds_alternative<PlusMinusOneConstraint>(pb.discrete);
    for (int j : discrete_indices(pb)) {
      std::vector<T> a = B.zeros();
      a[j] = T(1.0);
      B.row(a, T(1.0));
      a[j] = T(-1.0);
      B.row(std::move(a), T(pm1 ? 1.0 : 0.0));
    }
  }
  return std::move(B.qp);
}

template <class T>
StepQP<T> build_polish(const ParametricProblem& pb, const std::vector<T>& x, const IterState<T>& in) {
  const int n = pb.n;
  if (std::holds_alternative<SparsityConstraint>(pb.discrete)) {
    if (static_cast<int>(in.support.size()) != n)
      throw std::invalid_argument("polish after sparsity rounding needs the support");
    Builder<T> B;
    B.init(n);
    B.qp.P = pb.objective.P;
    B.qp.c = lin_coef(pb.objective, x);
    identity_z(B, n);
    add_problem_rows(B, pb, x, "polish step");
    for (int j = 0; j < n; ++j) {
      std::vector<T> a = B.zeros();
      a[j] = T(1.0) - in.support[j];
      B.eq(a, T(0.0));
    }
    return std::move(B.qp);
  }
  const std::vector<int> I = discrete_indices(pb);
  std::vector<char> fixed(n, 0);
  for (int j : I) fixed[j] = 1;
  std::vector<int> C;
  for (int j = 0; j < n; ++j)
    if (!fixed[j]) C.push_back(j);
  const int nc = static_cast<int>(C.size());
  Builder<T> B;
  B.init(nc);
  B.qp.z_from_u.assign(n, -1);
  const std::vector<T> c = lin_coef(pb.objective, x);
  for (int a = 0; a < nc; ++a) {
    B.qp.z_from_u[C[a]] = a;
    B.qp.ubound[a] = UBound{UBound::Z, C[a], 1};
    T ca = c[C[a]];
    for (int j : I)
      if (pb.objective.P(C[a], j) != 0.0) ca += in.z[j] * pb.objective.P(C[a], j);
    B.qp.c[a] = ca;
    for (int b = 0; b < nc; ++b) B.qp.P(a, b) = pb.objective.P(C[a], C[b]);
  }
  auto split = [&](const QuadraticForm& g, std::vector<T>& row, T& rhs) {
    const std::vector<T> full = lin_coef(g, x);
    rhs = offset(g, x) * -1.0;
    row.assign(nc, T(0.0));
    for (int a = 0; a < nc; ++a) row[a] = full[C[a]];
    for (int j : I) rhs -= full[j] * in.z[j];
  };
  for (const auto& g : pb.ineq) {
    require_affine(g, "polish step");
    std::vector<T> row;
    T rhs;
    split(g, row, rhs);
    B.row(std::move(row), rhs);
  }
  for (const auto& h : pb.eq) {
    std::vector<T> row;
    T rhs;
    split(h, row, rhs);
    B.eq(row, rhs);
  }
  return std::move(B.qp);
}

}  // namespace

template <class T>
T quad_value(const QuadraticForm& q, const std::vector<T>& z, const std::vector<T>& x,
             bool include_offset) {
  T v = quad(q.P, z) * 0.5;
  const std::vector<T> c = lin_coef(q, x);
  for (size_t j = 0; j < z.size(); ++j) v += c[j] * z[j];
  if (include_offset) v += offset(q, x);
  return v;
}

template <class T>
StepQP<T> build_step_qp(const StepSpec& spec, const ParametricProblem& problem,
                        const std::vector<T>& x, const IterState<T>& in) {
  if (static_cast<int>(x.size()) != problem.d) throw DimensionError("parameter dimension");
  const bool needs_z = !std::holds_alternative<RelaxStep>(spec);
  if (needs_z && static_cast<int>(in.z.size()) != problem.n)
    throw DimensionError("iterate dimension");
  return std::visit(
      [&](const auto& s) -> StepQP<T> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, TrustRegionStep>)
          return build_convexified(problem, x, in, s.rho, 0.0, false);
        else if constexpr (std::is_same_v<S, PenalizedCCPStep>)
          return build_convexified(problem, x, in, 0.0, s.tau, true);
        else if constexpr (std::is_same_v<S, ProxLinearStep>)
          return build_prox(problem, x, in, s.rho);
        else if constexpr (std::is_same_v<S, RelaxStep>)
          return build_relax(problem, x, s.lambda);
        else if constexpr (std::is_same_v<S, PolishStep>)
          return build_polish(problem, x, in);
        else
          throw std::invalid_argument("round is not a QP step");
      },
      spec);
}

template <class T>
IterState<T> next_state(const StepQP<T>& qp, const std::vector<T>& u, const IterState<T>& in) {
  IterState<T> out;
  const int n = static_cast<int>(qp.z_from_u.size());
  out.z.resize(n);
  for (int j = 0; j < n; ++j) out.z[j] = qp.z_from_u[j] >= 0 ? u[qp.z_from_u[j]] : in.z[j];
  for (int idx : qp.abs_from_u) out.abs.push_back(u[idx]);
  return out;
}

StandardQP to_standard(const StepQP<double>& qp) {
  StandardQP s;
  const int m = qp.num_rows(), n = qp.num_vars();
  s.P = qp.P;
  s.c = Eigen::Map<const Vec>(qp.c.data(), n);
  s.A = Mat(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) s.A(i, j) = qp.A[i][j];
  s.b = Eigen::Map<const Vec>(qp.b.data(), m);
  s.is_eq = qp.is_eq;
  return s;
}

RoundResult round_forward(const ParametricProblem& problem, const IterState<double>& in) {
  RoundResult out;
  out.state.z = in.z;
  auto& v = out.state.z;
  if (const auto* b = std::get_if<BinaryConstraint>(&problem.discrete)) {
    for (int i : b->indices) v[i] = in.z[i] >= 0.5 ? 1.0 : 0.0;
  } else if (const auto* p = std::get_if<PlusMinusOneConstraint>(&problem.discrete)) {
    for (int i : p->indices) v[i] = in.z[i] >= 0.0 ? 1.0 : -1.0;
  } else if (const auto* s = std::get_if<SparsityConstraint>(&problem.discrete)) {
    const int n = static_cast<int>(in.z.size());
    std::vector<double> mag(n);
    for (int i = 0; i < n; ++i) mag[i] = in.abs.empty() ? std::abs(in.z[i]) : in.abs[i];
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return mag[a] > mag[b]; });
    out.state.support.assign(n, 0.0);
    for (int r = 0; r < s->k; ++r) out.state.support[order[r]] = 1.0;
    for (int i = 0; i < n; ++i) v[i] = out.state.support[i] > 0 ? in.z[i] : 0.0;
    if (s->k > 0)
      out.round_threshold_t = mag[order[s->k - 1]];
    else
      out.round_threshold_t = n ? *std::max_element(mag.begin(), mag.end()) : 0.0;
  } else {
    throw std::invalid_argument("round step without a discrete constraint");
  }
  return out;
}

template StepQP<double> build_step_qp(const StepSpec&, const ParametricProblem&,
                                      const std::vector<double>&, const IterState<double>&);
template StepQP<Expr> build_step_qp(const StepSpec&, const ParametricProblem&,
                                    const std::vector<Expr>&, const IterState<Expr>&);
template IterState<double> next_state(const StepQP<double>&, const std::vector<double>&,
                                      const IterState<double>&);
template IterState<Expr> next_state(const StepQP<Expr>&, const std::vector<Expr>&,
                                    const IterState<Expr>&);
template double quad_value(const QuadraticForm&, const std::vector<double>&,
                           const std::vector<double>&, bool);
template Expr quad_value(const QuadraticForm&, const std::vector<Expr>&, const std::vector<Expr>&,
                         bool);

}  // namespace scpv
