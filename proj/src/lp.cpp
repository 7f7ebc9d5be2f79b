#include "scpv/lp.hpp"

#include <algorithm>
#include <cmath>

namespace scpv {

namespace {

enum class NB : unsigned char { Basic, Lower, Upper, Free };

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SimplexOptions& opt) : opt_(opt) {
    n_ = lp.num_cols;
    m_ = static_cast<int>(lp.rows.size());
    N_ = n_ + m_;
    A_ = Eigen::MatrixXd::Zero(m_, n_);
    lo_.resize(N_);
    hi_.resize(N_);
    cost_.assign(N_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lp.col_lo[j];
      hi_[j] = lp.col_hi[j];
      cost_[j] = lp.obj[j];
    }
    for (int i = 0; i < m_; ++i) {
      double scale = 0.0;
      for (const auto& [j, a] : lp.rows[i].terms) A_(i, j) += a;
      scale = A_.row(i).cwiseAbs().maxCoeff();
      if (!(scale > 0)) scale = 1.0;
      A_.row(i) /= scale;
      row_scale_.push_back(scale);
      lo_[n_ + i] = lp.rows[i].lo / scale;
      hi_[n_ + i] = lp.rows[i].hi / scale;
    }
  }

  LPResult run() {
    LPResult res;
    for (int j = 0; j < N_; ++j)
      if (lo_[j] > hi_[j] + opt_.feas_tol) {
        res.status = LPStatus::Infeasible;
        return res;
      }
    init_basis();
    int degenerate = 0;
    int since_refactor = 0;
    bool bland = false;
    int it = 0;
    for (; it < opt_.max_iter; ++it) {
      if (since_refactor >= opt_.refactor_every) {
        refactor();
        since_refactor = 0;
      }
      const bool phase1 = compute_costs();
      const Eigen::VectorXd pi = Binv_.transpose() * cB_;
      // Pricing.
      int q = -1;
      double best = 0.0;
      int dir = 0;
      for (int j = 0; j < N_; ++j) {
        if (state_[j] == NB::Basic) continue;
        if (lo_[j] == hi_[j]) continue;
        const double cj = phase1 ? 0.0 : cost_[j];
        const double dj = cj - (j < n_ ? pi.dot(A_.col(j)) : -pi(j - n_));
        int dj_dir = 0;
        if (dj < -opt_.opt_tol && (state_[j] == NB::Lower || state_[j] == NB::Free)) dj_dir = 1;
        if (dj > opt_.opt_tol && (state_[j] == NB::Upper || state_[j] == NB::Free)) dj_dir = -1;
        if (!dj_dir) continue;
        const double score = std::abs(dj) / (1.0 + colnorm(j));
        if (bland) {
          q = j;
          dir = dj_dir;
          break;
        }
        if (score > best) {
          best = score;
          q = j;
          dir = dj_dir;
        }
      }
      if (q < 0) {
        if (phase1) {
          refactor();
          if (!compute_costs()) continue;  // became feasible after refactor
          res.status = LPStatus::Infeasible;
          res.iterations = it;
          return res;
        }
        refactor();
        if (compute_costs()) continue;
        res.status = LPStatus::Optimal;
        break;
      }
      Eigen::VectorXd alpha = q < n_ ? Eigen::VectorXd(Binv_ * A_.col(q))
                                     : Eigen::VectorXd(-Binv_.col(q - n_));
      // x_B(theta) = x_B - theta * dir * alpha.
      const auto [theta, leave, leave_to_upper] = ratio_test(alpha, dir, q, phase1, bland);
      if (!std::isfinite(theta)) {
        if (phase1) {  // numerical trouble: refactor and retry with Bland.
          refactor();
          bland = true;
          continue;
        }
        res.status = LPStatus::Unbounded;
        res.iterations = it;
        return res;
      }
      if (theta < 1e-12) {
        if (++degenerate > 40) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
      // Update values.
      for (int i = 0; i < m_; ++i) xB(i) -= theta * dir * alpha(i);
      x_[q] += theta * dir;
      if (leave < 0) {
        // Bound flip of the entering column.
        state_[q] = dir > 0 ? NB::Upper : NB::Lower;
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
        continue;
      }
      const int jl = basis_[leave];
      state_[jl] = leave_to_upper ? NB::Upper : NB::Lower;
      x_[jl] = leave_to_upper ? hi_[jl] : lo_[jl];
      if (!std::isfinite(x_[jl])) {
        state_[jl] = NB::Free;
        x_[jl] = 0.0;
      }
      // Pivot: basis position `leave` gets column q.
      const double piv = alpha(leave);
      Eigen::RowVectorXd prow = Binv_.row(leave) / piv;
      for (int i = 0; i < m_; ++i) {
        if (i == leave) continue;
        if (alpha(i) != 0.0) Binv_.row(i) -= alpha(i) * prow;
      }
      Binv_.row(leave) = prow;
      const double xq = x_[q];
      pos_[jl] = -1;
      basis_[leave] = q;
      pos_[q] = leave;
      state_[q] = NB::Basic;
      xB(leave) = xq;
      ++since_refactor;
    }
    res.iterations = it;
    if (it >= opt_.max_iter) {
      res.status = LPStatus::IterationLimit;
      return res;
    }
    res.x.assign(x_.begin(), x_.begin() + n_);
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j])) res.x[j] = std::max(res.x[j], lo_[j]);
      if (std::isfinite(hi_[j])) res.x[j] = std::min(res.x[j], hi_[j]);
    }
    res.value = 0.0;
    for (int j = 0; j < n_; ++j) res.value += cost_[j] * res.x[j];
    for (int i = 0; i < m_; ++i) cB_(i) = cost_[basis_[i]];
    const Eigen::VectorXd pi = Binv_.transpose() * cB_;
    res.row_dual.resize(m_);
    for (int i = 0; i < m_; ++i) res.row_dual[i] = pi(i) / row_scale_[i];
    res.reduced_cost.resize(n_);
    for (int j = 0; j < n_; ++j) res.reduced_cost[j] = cost_[j] - pi.dot(A_.col(j));
    return res;
  }

 private:
  double& xB(int i) { return x_[basis_[i]]; }
  double colnorm(int j) const { return j < n_ ? A_.col(j).norm() : 1.0; }

  void init_basis() {
    x_.assign(N_, 0.0);
    state_.assign(N_, NB::Lower);
    pos_.assign(N_, -1);
    basis_.resize(m_);
    for (int j = 0; j < n_; ++j) place_at_bound(j);
    for (int i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      pos_[n_ + i] = i;
      state_[n_ + i] = NB::Basic;
    }
    Binv_ = -Eigen::MatrixXd::Identity(m_, m_);
    recompute_basic();
  }

  void place_at_bound(int j) {
    if (std::isfinite(lo_[j])) {
      state_[j] = NB::Lower;
      x_[j] = lo_[j];
    } else if (std::isfinite(hi_[j])) {
      state_[j] = NB::Upper;
      x_[j] = hi_[j];
    } else {
      state_[j] = NB::Free;
      x_[j] = 0.0;
    }
  }

  void recompute_basic() {
    // B x_B = -N x_N, with columns of [A -I].
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < N_; ++j) {
      if (state_[j] == NB::Basic || x_[j] == 0.0) continue;
      if (j < n_) rhs -= A_.col(j) * x_[j];
      else rhs(j - n_) += x_[j];
    }
    const Eigen::VectorXd xb = Binv_ * rhs;
    for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb(i);
  }

  void refactor() {
    if (m_ == 0) return;
    Eigen::MatrixXd B(m_, m_);
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      if (j < n_) B.col(i) = A_.col(j);
      else {
        B.col(i).setZero();
        B(j - n_, i) = -1.0;
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (lu.rank() < m_) {
      // Singular basis from accumulated round-off: fall back to the slack basis.
      for (int i = 0; i < m_; ++i) {
        const int j = basis_[i];
        pos_[j] = -1;
        place_at_bound(j);
      }
      for (int j = 0; j < n_; ++j)
        if (state_[j] == NB::Basic) place_at_bound(j);
      for (int i = 0; i < m_; ++i) {
        basis_[i] = n_ + i;
        pos_[n_ + i] = i;
        state_[n_ + i] = NB::Basic;
      }
      Binv_ = -Eigen::MatrixXd::Identity(m_, m_);
    } else {
      Binv_ = lu.inverse();
    }
    recompute_basic();
  }

  /// Fills cB_; returns true when some basic variable is infeasible (phase 1).
  bool compute_costs() {
    cB_.resize(m_);
    bool infeasible = false;
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      const double v = x_[j];
      if (v < lo_[j] - tol(lo_[j])) {
        cB_(i) = -1.0;
        infeasible = true;
      } else if (v > hi_[j] + tol(hi_[j])) {
        cB_(i) = 1.0;
        infeasible = true;
      } else {
        cB_(i) = 0.0;
      }
    }
    if (!infeasible)
      for (int i = 0; i < m_; ++i) cB_(i) = cost_[basis_[i]];
    return infeasible;
  }

  double tol(double bound) const {
    return opt_.feas_tol * (1.0 + (std::isfinite(bound) ? std::min(std::abs(bound), 1e3) : 0.0));
  }

  struct Ratio {
    double theta;
    int leave;
    bool to_upper;
  };

  Ratio ratio_test(const Eigen::VectorXd& alpha, int dir, int q, bool phase1, bool bland) {
    // Harris pass 1: largest step with bounds relaxed by tolerance.
    double theta_max = kInf;
    if (std::isfinite(lo_[q]) && std::isfinite(hi_[q])) theta_max = hi_[q] - lo_[q];
    auto limit = [&](int i, bool relaxed, double& bound_val, bool& to_upper) -> double {
      const double a = dir * alpha(i);
      if (std::abs(a) <= opt_.pivot_tol) return kInf;
      const int j = basis_[i];
      const double v = x_[j];
      if (a > 0) {  // decreasing
        if (phase1 && v > hi_[j] + tol(hi_[j])) {
          bound_val = hi_[j];
          to_upper = true;
          return (v - hi_[j] + (relaxed ? tol(hi_[j]) : 0.0)) / a;
        }
        if (!std::isfinite(lo_[j])) return kInf;
        if (phase1 && v < lo_[j] - tol(lo_[j])) return kInf;
        bound_val = lo_[j];
        to_upper = false;
        return std::max(0.0, v - lo_[j] + (relaxed ? tol(lo_[j]) : 0.0)) / a;
      }
      // increasing
      if (phase1 && v < lo_[j] - tol(lo_[j])) {
        bound_val = lo_[j];
        to_upper = false;
        return (lo_[j] - v + (relaxed ? tol(lo_[j]) : 0.0)) / (-a);
      }
      if (!std::isfinite(hi_[j])) return kInf;
      if (phase1 && v > hi_[j] + tol(hi_[j])) return kInf;
      bound_val = hi_[j];
      to_upper = true;
      return std::max(0.0, hi_[j] - v + (relaxed ? tol(hi_[j]) : 0.0)) / (-a);
    };
    double relaxed_min = theta_max;
    for (int i = 0; i < m_; ++i) {
      double bv;
      bool up;
      relaxed_min = std::min(relaxed_min, limit(i, true, bv, up));
    }
    if (!std::isfinite(relaxed_min)) return {kInf, -1, false};
    // Pass 2: among candidates within relaxed_min, largest |alpha|.
    int leave = -1;
    bool to_upper = false;
    double best_alpha = 0.0, theta = kInf;
    for (int i = 0; i < m_; ++i) {
      double bv;
      bool up;
      const double t = limit(i, false, bv, up);
      if (t <= relaxed_min) {
        const double a = std::abs(alpha(i));
        const bool better = bland ? (leave < 0 || basis_[i] < basis_[leave]) : a > best_alpha;
        if (better) {
          best_alpha = a;
          leave = i;
          to_upper = up;
          theta = t;
        }
      }
    }
    if (leave < 0 || theta_max <= theta) {
      if (std::isfinite(theta_max) && (leave < 0 || theta_max <= theta)) return {theta_max, -1, false};
    }
    return {std::max(theta, 0.0), leave, to_upper};
  }

  SimplexOptions opt_;
  int n_ = 0, m_ = 0, N_ = 0;
  Eigen::MatrixXd A_;
  std::vector<double> lo_, hi_, cost_, x_, row_scale_;
  std::vector<NB> state_;
  std::vector<int> pos_, basis_;
  Eigen::MatrixXd Binv_;
  Eigen::VectorXd cB_;
};

}  // namespace

LPResult solve_simplex(const LinearProgram& lp, const SimplexOptions& opt) {
  Simplex s(lp, opt);
  return s.run();
}

}  // namespace scpv
