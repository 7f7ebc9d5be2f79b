#include "scpv/families.hpp"

#include "scpv/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace scpv {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Box-Muller on the raw generator keeps the data identical across standard libraries.
double gaussian(Rng& rng) {
  double u1;
  do u1 = uniform(rng);
  while (u1 <= 0.0);
  const double u2 = uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

struct Ctx {
  const FamilyConfig& cfg;
  std::map<std::string, double> c;
  Rng rng;

  Ctx(const FamilyConfig& config) : cfg(config), c(family_constants(config.family)), rng(config.seed) {
    for (const auto& [k, v] : config.constants) {
      if (!c.count(k))
        throw std::invalid_argument("family " + config.family + " has no constant '" + k + "'");
      c[k] = v;
    }
  }
  double operator[](const std::string& k) const { return c.at(k); }
  int dim(int v, int def) const {
    const int out = v < 0 ? def : v;
    if (out < 1) throw std::invalid_argument("family dimensions must be >= 1");
    return out;
  }
  int K(int def) const {
    const int out = cfg.K < 0 ? def : cfg.K;
    if (out < 0) throw std::invalid_argument("K must be >= 0");
    return out;
  }
  void positive(const std::string& k) const {
    if (!(c.at(k) > 0)) throw std::invalid_argument("constant '" + k + "' must be > 0");
  }
};

QuadraticForm affine(int n, int d) { return QuadraticForm::zero(n, d); }

Box box(int n, double lo, double hi) { return Box{Vec::Constant(n, lo), Vec::Constant(n, hi)}; }

ParameterSet param_box(const Ctx& ctx, int d, double lo, double hi) {
  ParameterSet ps;
  ps.lower = ctx.cfg.x_lower ? *ctx.cfg.x_lower : Vec::Constant(d, lo);
  ps.upper = ctx.cfg.x_upper ? *ctx.cfg.x_upper : Vec::Constant(d, hi);
  if (ps.lower.size() != d || ps.upper.size() != d)
    throw std::invalid_argument("parameter bounds must have dimension " + std::to_string(d));
  return ps;
}

// Bound rows lo <= z_j <= hi as affine inequalities.
void add_box_rows(ParametricProblem& p, double lo, double hi) {
  for (int j = 0; j < p.n; ++j) {
    QuadraticForm up = affine(p.n, p.d), dn = affine(p.n, p.d);
    up.c(j) = 1.0;
    up.r0 = -hi;
    dn.c(j) = -1.0;
    dn.r0 = lo;
    p.ineq.push_back(dn);
    p.ineq.push_back(up);
  }
}

void set_start(FamilyInstance& fi, const Vec& cold, bool warm) {
  if (!warm) {
    fi.schedule.init = ColdStart{cold};
    return;
  }
  const OracleResult o = reference_oracle(fi.problem, fi.pset.center(), oracle_for(fi.problem));
  if (!o.feasible) throw std::runtime_error("warm start: no feasible point at the center");
  fi.schedule.init = WarmStart{o.argmin};
}

FamilyInstance box_qp(Ctx& ctx) {
  const int n = ctx.dim(ctx.cfg.n, 2);
  ctx.positive("rho");
  FamilyInstance fi;
  auto& p = fi.problem;
  p.n = p.d = n;
  Mat Pb(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Pb(i, j) = gaussian(ctx.rng);
  p.objective = QuadraticForm::zero(n, n);
  p.objective.P = Pb + Pb.transpose();
  p.objective.K = Mat::Identity(n, n);
  add_box_rows(p, -1.0, 1.0);
  p.z_bounds = box(n, -1.0, 1.0);
  fi.pset = param_box(ctx, n, ctx["x_lo"], ctx["x_hi"]);
  for (int k = 0; k < ctx.K(5); ++k) fi.schedule.steps.push_back(TrustRegionStep{ctx["rho"]});
  fi.metric = PerformanceMetric::Suboptimality;
  fi.final_feasible = true;
  set_start(fi, Vec::Zero(n), ctx.cfg.warm_start.value_or(false));
  return fi;
}

FamilyInstance network_utility(Ctx& ctx) {
  const int d = ctx.dim(ctx.cfg.d, 4), n = ctx.dim(ctx.cfg.n, 3);
  ctx.positive("rho");
  FamilyInstance fi;
  auto& p = fi.problem;
  p.n = n;
  p.d = d;
  Mat R(d, n);
  for (int j = 0; j < n; ++j) {
    // Every flow uses at least one edge so its rate is bounded by a capacity.
    do
      for (int i = 0; i < d; ++i) R(i, j) = uniform(ctx.rng) < 0.5 ? 1.0 : 0.0;
    while (R.col(j).isZero());
  }
  p.objective = QuadraticForm::zero(n, d);
  p.objective.P = -Mat::Identity(n, n);  // maximize 1/2 z'z
  for (int i = 0; i < d; ++i) {
    QuadraticForm g = affine(n, d);
    g.c = R.row(i).transpose();  // R_i z - x_i <= 0
    g.r(i) = -1.0;
    p.ineq.push_back(g);
  }
  for (int j = 0; j < n; ++j) {
    QuadraticForm g = affine(n, d);
    g.c(j) = -1.0;
    p.ineq.push_back(g);
  }
  const double xmax = ctx.cfg.x_upper ? ctx.cfg.x_upper->maxCoeff() : ctx["x_hi"];
  p.z_bounds = box(n, 0.0, xmax);
  fi.pset = param_box(ctx, d, ctx["x_lo"], ctx["x_hi"]);
  for (int k = 0; k < ctx.K(5); ++k) fi.schedule.steps.push_back(TrustRegionStep{ctx["rho"]});
  fi.metric = PerformanceMetric::Suboptimality;
  fi.final_feasible = true;
  set_start(fi, Vec::Constant(n, ctx["init"]), ctx.cfg.warm_start.value_or(false));
  return fi;
}

}  // namespace

Mat power_converter_A() {
  Mat A(4, 4);
  A << 0.95, -0.10, 0.00, 0.00,
       0.10, 0.95, -0.10, 0.00,
       0.00, 0.10, 0.95, -0.10,
       0.00, 0.00, 0.10, 0.95;
  return A;
}

Mat power_converter_B() {
  Mat B(4, 1);
  B << 0.30, 0.00, 0.00, 0.10;
  return B;
}

namespace {

const Vec& s_ref() {
  static const Vec r = (Vec(4) << 0.0, 0.0, 0.0, 1.0).finished();
  return r;
}

// s_t = F_t x + G_t u for t = 1..T.
void condense(int T, std::vector<Mat>& F, std::vector<Mat>& G) {
  const Mat A = power_converter_A(), B = power_converter_B();
  F.clear();
  G.clear();
  Mat Ft = Mat::Identity(4, 4);
  Mat Gt = Mat::Zero(4, T);
  for (int t = 1; t <= T; ++t) {
    Ft = A * Ft;
    Gt = A * Gt;
    Gt.col(t - 1) += B.col(0);
    F.push_back(Ft);
    G.push_back(Gt);
  }
}

FamilyInstance power_converter(Ctx& ctx) {
  const int T = ctx.dim(ctx.cfg.T, 3);
  ctx.positive("tau");
  FamilyInstance fi;
  auto& p = fi.problem;
  p.n = T;
  p.d = 4;
  std::vector<Mat> F, G;
  condense(T, F, G);
  // Q = e4 e4': cost 1/2 sum (e4'F_t x + e4'G_t u - 1)^2.
  p.objective = QuadraticForm::zero(T, 4);
  for (int t = 0; t < T; ++t) {
    const Vec g = G[t].row(3).transpose();
    const Vec f = F[t].row(3).transpose();
    p.objective.P += g * g.transpose();
    p.objective.K += g * f.transpose();
    p.objective.c -= s_ref()(3) * g;
    p.objective.r -= s_ref()(3) * f;
    p.objective.r0 += 0.5 * s_ref()(3) * s_ref()(3);
  }
  p.objective.P = 0.5 * (p.objective.P + p.objective.P.transpose());
  add_box_rows(p, -1.0, 1.0);
  for (int j = 0; j < T; ++j) {
    QuadraticForm g = affine(T, 4);  // 1 - u_j^2 <= 0
    g.P(j, j) = -2.0;
    g.r0 = 1.0;
    p.ineq.push_back(g);
  }
  std::vector<int> all(T);
  for (int j = 0; j < T; ++j) all[j] = j;
  p.discrete = PlusMinusOneConstraint{all};
  p.z_bounds = box(T, -1.0, 1.0);
  fi.pset = param_box(ctx, 4, ctx["x_lo"], ctx["x_hi"]);
  for (int k = 0; k < ctx.K(5); ++k) fi.schedule.steps.push_back(PenalizedCCPStep{ctx["tau"]});
  fi.schedule.steps.push_back(RoundStep{});
  fi.metric = PerformanceMetric::Suboptimality;
  fi.final_feasible = true;
  set_start(fi, Vec::Zero(T), ctx.cfg.warm_start.value_or(true));
  return fi;
}

FamilyInstance knapsack(Ctx& ctx) {
  const int n = ctx.dim(ctx.cfg.n, 3);
  ctx.positive("tau0");
  ctx.positive("kappa");
  FamilyInstance fi;
  auto& p = fi.problem;
  p.n = p.d = n;
  Vec a(n);
  for (int j = 0; j < n; ++j) {
    do a(j) = uniform(ctx.rng);
    while (a(j) <= 0.0);
  }
  const double b = 0.5 * a.sum();
  p.objective = QuadraticForm::zero(n, n);
  p.objective.K = -Mat::Identity(n, n);  // maximize x'z
  QuadraticForm cap = affine(n, n);
  cap.c = a;
  cap.r0 = -b;
  p.ineq.push_back(cap);
  add_box_rows(p, 0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    QuadraticForm g = affine(n, n);  // z_j - z_j^2 <= 0
    g.P(j, j) = -2.0;
    g.c(j) = 1.0;
    p.ineq.push_back(g);
  }
  std::vector<int> all(n);
  for (int j = 0; j < n; ++j) all[j] = j;
  p.discrete = BinaryConstraint{all};
  p.z_bounds = box(n, 0.0, 1.0);
  fi.pset = param_box(ctx, n, ctx["x_lo"], ctx["x_hi"]);
  double tau = ctx["tau0"];
  for (int k = 0; k < ctx.K(3); ++k, tau *= ctx["kappa"])
    fi.schedule.steps.push_back(PenalizedCCPStep{tau});
  fi.metric = PerformanceMetric::ViolationSquaredL2;
  fi.final_feasible = false;
  set_start(fi, Vec::Constant(n, 0.5), false);
  return fi;
}

double sigma_min(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues().minCoeff();
}

FamilyInstance phase_retrieval(Ctx& ctx) {
  const int d = ctx.dim(ctx.cfg.d, 4), n = ctx.dim(ctx.cfg.n, 2);
  ctx.positive("rho");
  if (d < n) throw std::invalid_argument("phase retrieval needs d >= n");
  FamilyInstance fi;
  auto& p = fi.problem;
  p.n = n;
  p.d = d;
  Mat A(d, n);  // rows a_i'
  // Full column rank keeps the minimizers bounded.
  do
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < n; ++j) {
        const double g = gaussian(ctx.rng);
        A(i, j) = uniform(ctx.rng) < ctx["density"] ? g : 0.0;
      }
  while (sigma_min(A) < 0.05);
  p.objective = QuadraticForm::zero(n, d);
  for (int i = 0; i < d; ++i) {
    AbsTerm t;
    t.weight = 1.0 / d;
    t.inner = QuadraticForm::zero(n, d);
    const Vec ai = A.row(i).transpose();
    t.inner.P = 2.0 * ai * ai.transpose();
    t.inner.r(i) = -1.0;
    p.abs_terms.push_back(t);
  }
  fi.pset = param_box(ctx, d, ctx["x_lo"], ctx["x_hi"]);
  const double xmax = fi.pset.upper.maxCoeff();
  const int K = ctx.K(3);
  const double rho = ctx["rho"];
  for (int k = 0; k < K; ++k) fi.schedule.steps.push_back(ProxLinearStep{rho});
  fi.metric = PerformanceMetric::Suboptimality;
  fi.final_feasible = true;  // unconstrained

  // Minimizers: f(z*) <= f(0) <= xmax gives |a_i'z*| <= sqrt((d + 1) xmax), then
  // z* = A^+ (A z*).
  const Mat pinv = A.completeOrthogonalDecomposition().pseudoInverse();
  const double s = std::sqrt((d + 1) * xmax);
  double star = 0.0;
  for (int j = 0; j < n; ++j) star = std::max(star, s * pinv.row(j).cwiseAbs().sum());
  p.z_bounds = box(n, -star, star);
  set_start(fi, Vec::Zero(n), ctx.cfg.warm_start.value_or(true));
  // Iterates: the prox step does not increase its model, so
  // |z_{k+1} - z_k|_2 <= sqrt(2 rho f(z_k)) with f(z) <= mean_i (|a_i|^2 |z|^2 + xmax).
  double R = initial_point(fi.schedule.init)->norm();
  double a2 = 0.0;
  for (int i = 0; i < d; ++i) a2 += A.row(i).squaredNorm() / d;
  for (int k = 0; k < K; ++k) R += std::sqrt(2.0 * rho * (a2 * R * R + xmax));
  const double half = std::max(star, R);
  p.z_bounds = box(n, -half, half);
  return fi;
}

FamilyInstance sparse_coding(Ctx& ctx) {
  const int d = ctx.dim(ctx.cfg.d, 6), n = ctx.dim(ctx.cfg.n, 4);
  const int k = ctx.dim(ctx.cfg.k, 2);
  ctx.positive("lambda");
  if (k > n) throw std::invalid_argument("sparse coding needs k <= n");
  if (d < n) throw std::invalid_argument("sparse coding needs d >= n");
  FamilyInstance fi;
  auto& p = fi.problem;
  p.n = n;
  p.d = d;
  Mat A(d, n);
  for (;;) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < n; ++j) {
        const double g = gaussian(ctx.rng);
        A(i, j) = uniform(ctx.rng) < ctx["density"] ? g : 0.0;
      }
    if ((A.colwise().norm().array() == 0.0).any()) continue;
    const Vec inv = A.colwise().norm().cwiseInverse().transpose();
    A = (A * inv.asDiagonal()).eval();
    if (sigma_min(A) >= 0.05) break;
  }
  p.objective = QuadraticForm::zero(n, d);
  p.objective.P = A.transpose() * A;
  p.objective.P = 0.5 * (p.objective.P + p.objective.P.transpose());
  p.objective.K = -A.transpose();
  p.discrete = SparsityConstraint{k};
  fi.pset = param_box(ctx, d, ctx["x_lo"], ctx["x_hi"]);
  // |Az - x| <= |x| for the lasso, polish and optimal points, so |z| <= 2|x| / sigma_min(A).
  const double xnorm = std::max(fi.pset.lower.cwiseAbs().cwiseMax(fi.pset.upper.cwiseAbs()).norm(), 1e-12);
  const double R = 2.0 * xnorm / sigma_min(A);
  p.z_bounds = box(n, -R, R);
  fi.schedule.steps = {RelaxStep{ctx["lambda"]}, RoundStep{}, PolishStep{}};
  fi.schedule.init = NoInit{};
  fi.metric = PerformanceMetric::Suboptimality;
  fi.final_feasible = true;
  return fi;
}

FamilyInstance hybrid_vehicle(Ctx& ctx) {
  const int T = ctx.dim(ctx.cfg.T, 3);
  for (const char* k : {"tau", "p_max", "e_max"}) ctx.positive(k);
  const double alpha = ctx["alpha"], beta = ctx["beta"], gamma = ctx["gamma"], eta = ctx["eta"];
  const double csw = ctx["c"], pmax = ctx["p_max"], emin = ctx["e_min"], emax = ctx["e_max"];
  const double tau = ctx["tau"];
  FamilyInstance fi;
  auto& p = fi.problem;
  // z = (P_eng[0..T), zb[0..T), a[0..T)),  x = (E_init, P_load[0..T), z_prev).
  const int n = 3 * T, d = T + 2;
  p.n = n;
  p.d = d;
  auto PE = [](int t) { return t; };
  auto ZB = [T](int t) { return T + t; };
  auto AU = [T](int t) { return 2 * T + t; };
  // E_t = E_init - tau sum_{s<t} (P_load_s - P_eng_s) as (coef on z, coef on x).
  auto energy = [&](int t) {
    QuadraticForm e = affine(n, d);
    e.r(0) = 1.0;
    for (int s = 0; s < t; ++s) {
      e.r(1 + s) = -tau;
      e.c(PE(s)) = tau;
    }
    return e;
  };
  for (int t = 1; t <= T; ++t) {
    QuadraticForm lo = energy(t), hi = energy(t);
    lo.c = -lo.c;
    lo.r = -lo.r;
    lo.r0 = emin;  // E_min - E_t <= 0
    hi.r0 = -emax;  // E_t - E_max <= 0
    p.ineq.push_back(lo);
    p.ineq.push_back(hi);
  }
  for (int t = 0; t < T; ++t) {
    QuadraticForm g = affine(n, d);
    g.c(PE(t)) = -1.0;
    p.ineq.push_back(g);
    QuadraticForm h = affine(n, d);
    h.c(PE(t)) = 1.0;
    h.c(ZB(t)) = -pmax;
    p.ineq.push_back(h);
    // zb_t - zb_{t-1} - a_t <= 0 with zb_{-1} = z_prev, and -a_t <= 0.
    QuadraticForm s = affine(n, d);
    s.c(ZB(t)) = 1.0;
    s.c(AU(t)) = -1.0;
    if (t == 0) s.r(T + 1) = -1.0; else s.c(ZB(t - 1)) = -1.0;
    p.ineq.push_back(s);
    QuadraticForm a = affine(n, d);
    a.c(AU(t)) = -1.0;
    p.ineq.push_back(a);
  }
  // eta (E_T - E_max)^2 + sum alpha P^2 + beta P + gamma zb + c a. E_T = L(x) + tau 1'P with
  // L(x) = E_init - tau sum P_load; the L(x)^2 term does not depend on z and is dropped.
  p.objective = QuadraticForm::zero(n, d);
  for (int s = 0; s < T; ++s)
    for (int t = 0; t < T; ++t) p.objective.P(PE(s), PE(t)) += 2.0 * eta * tau * tau;
  for (int t = 0; t < T; ++t) {
    p.objective.P(PE(t), PE(t)) += 2.0 * alpha;
    p.objective.K(PE(t), 0) = 2.0 * eta * tau;
    for (int s = 0; s < T; ++s) p.objective.K(PE(t), 1 + s) = -2.0 * eta * tau * tau;
    p.objective.c(PE(t)) = beta - 2.0 * eta * tau * emax;
    p.objective.c(ZB(t)) = gamma;
    p.objective.c(AU(t)) = csw;
  }
  p.objective.r(0) = -2.0 * eta * emax;
  for (int s = 0; s < T; ++s) p.objective.r(1 + s) = 2.0 * eta * emax * tau;
  p.objective.r0 = eta * emax * emax;
  std::vector<int> zb(T);
  for (int t = 0; t < T; ++t) zb[t] = ZB(t);
  p.discrete = BinaryConstraint{zb};
  p.z_bounds.lower = Vec::Zero(n);
  p.z_bounds.upper = Vec::Ones(n);
  p.z_bounds.upper.head(T).setConstant(pmax);

  Vec lo(d), hi(d);
  lo(0) = ctx["e_mid"] - ctx["delta_e"];
  hi(0) = ctx["e_mid"] + ctx["delta_e"];
  lo.segment(1, T).setConstant(ctx["p_lb"]);
  hi.segment(1, T).setConstant(ctx["p_ub"]);
  lo(T + 1) = 0.0;
  hi(T + 1) = 1.0;
  fi.pset = param_box(ctx, d, 0.0, 0.0);
  if (!ctx.cfg.x_lower) fi.pset.lower = lo;
  if (!ctx.cfg.x_upper) fi.pset.upper = hi;
  fi.pset.discrete_coords = {T + 1};
  fi.schedule.steps = {RelaxStep{0.0}, RoundStep{}, PolishStep{}};
  fi.schedule.init = NoInit{};
  fi.metric = PerformanceMetric::SubproblemFeasibility;
  fi.final_feasible = false;
  return fi;
}

}  // namespace

const std::vector<std::string>& family_ids() {
  static const std::vector<std::string> ids{"box_qp",          "network_utility", "power_converter",
                                            "knapsack",        "phase_retrieval", "sparse_coding",
                                            "hybrid_vehicle"};
  return ids;
}

std::map<std::string, double> family_constants(const std::string& f) {
  if (f == "box_qp") return {{"rho", 0.2}, {"x_lo", 2.0}, {"x_hi", 4.0}};
  if (f == "network_utility") return {{"rho", 1.0}, {"x_lo", 7.0}, {"x_hi", 8.0}, {"init", 0.5}};
  if (f == "power_converter") return {{"tau", 0.2}, {"x_lo", -2.0}, {"x_hi", 2.0}};
  if (f == "knapsack") return {{"tau0", 1.0}, {"kappa", 2.0}, {"x_lo", 5.0}, {"x_hi", 7.0}};
  if (f == "phase_retrieval")
    return {{"rho", 1.0}, {"x_lo", 6.0}, {"x_hi", 7.0}, {"density", 0.25}};
  if (f == "sparse_coding")
    return {{"lambda", 1.0}, {"x_lo", 5.0}, {"x_hi", 8.0}, {"density", 0.2}};
  if (f == "hybrid_vehicle")
    return {{"alpha", 1.0}, {"beta", 10.0}, {"gamma", 1.5}, {"eta", 2.0},   {"c", 1.0},
            {"p_max", 1.0}, {"e_min", 5.0}, {"e_max", 10.0}, {"tau", 2.0},  {"e_mid", 7.5},
            {"delta_e", 0.5}, {"p_lb", 0.0}, {"p_ub", 1.0}};
  throw UnknownFamily("unknown family '" + f + "'");
}

FamilyInstance generate(const FamilyConfig& config) {
  Ctx ctx(config);
  const std::string& f = config.family;
  FamilyInstance fi;
  if (f == "box_qp") fi = box_qp(ctx);
  else if (f == "network_utility") fi = network_utility(ctx);
  else if (f == "power_converter") fi = power_converter(ctx);
  else if (f == "knapsack") fi = knapsack(ctx);
  else if (f == "phase_retrieval") fi = phase_retrieval(ctx);
  else if (f == "sparse_coding") fi = sparse_coding(ctx);
  else fi = hybrid_vehicle(ctx);
  const ValidationReport rep = validate(fi.problem, fi.schedule, fi.pset);
  if (!rep.ok()) throw std::logic_error(f + ": generated instance is invalid: " + rep.issues.front());
  return fi;
}

double power_converter_simulated_cost(const Vec& x, const Vec& u) {
  const Mat A = power_converter_A(), B = power_converter_B();
  Vec s = x;
  double cost = 0.0;
  for (int t = 0; t < u.size(); ++t) {
    s = A * s + B * u(t);
    const double e = s(3) - s_ref()(3);
    cost += 0.5 * e * e;
  }
  return cost;
}

Mat power_converter_dropped_quadratic(int T) {
  std::vector<Mat> F, G;
  condense(T, F, G);
  Mat M = Mat::Zero(4, 4);
  for (int t = 0; t < T; ++t) {
    const Vec f = F[t].row(3).transpose();
    M += f * f.transpose();
  }
  return M;
}

}  // namespace scpv
