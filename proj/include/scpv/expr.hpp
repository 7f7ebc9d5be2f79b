#pragma once

// Quadratic polynomial expressions over program variables, and interval bounds on them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace scpv {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval point(double v) { return {v, v}; }
  bool empty(double tol = 0.0) const { return lo > hi + tol; }
  double width() const { return hi - lo; }
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
};

inline Interval operator+(Interval a, Interval b) { return {a.lo + b.lo, a.hi + b.hi}; }
inline Interval operator-(Interval a, Interval b) { return {a.lo - b.hi, a.hi - b.lo}; }
inline Interval operator*(double s, Interval a) {
  return s >= 0 ? Interval{s * a.lo, s * a.hi} : Interval{s * a.hi, s * a.lo};
}
Interval operator*(Interval a, Interval b);
Interval square(Interval a);
Interval hull(Interval a, Interval b);
Interval intersect(Interval a, Interval b);

/// Product that treats 0 * inf as 0 (bounds arithmetic).
double mul_bound(double a, double b);

struct DegreeError : std::logic_error {
  using std::logic_error::logic_error;
};

/// constant + sum_i a_i v_i + sum_{i<=j} q_ij v_i v_j.
class Expr {
 public:
  Expr() = default;
  Expr(double c) : constant_(c) {}  // NOLINT: implicit from scalars by intent.
  static Expr var(int i, double coef = 1.0) {
    Expr e;
    if (coef != 0.0) e.lin_[i] = coef;
    return e;
  }

  double constant() const { return constant_; }
  const std::map<int, double>& linear() const { return lin_; }
  const std::map<std::pair<int, int>, double>& quadratic() const { return quad_; }
  int degree() const { return !quad_.empty() ? 2 : (!lin_.empty() ? 1 : 0); }
  bool is_constant() const { return degree() == 0; }

  Expr& operator+=(const Expr& o);
  Expr& operator-=(const Expr& o);
  Expr& operator*=(double s);
  Expr operator-() const {
    Expr e = *this;
    e *= -1.0;
    return e;
  }

  friend Expr operator+(Expr a, const Expr& b) { return a += b; }
  friend Expr operator-(Expr a, const Expr& b) { return a -= b; }
  friend Expr operator*(Expr a, double s) { return a *= s; }
  friend Expr operator*(double s, Expr a) { return a *= s; }
  friend Expr operator*(const Expr& a, const Expr& b);

  double eval(const std::vector<double>& values) const;
  Interval bounds(const std::vector<double>& lo, const std::vector<double>& hi) const;

 private:
  void prune();
  double constant_ = 0.0;
  std::map<int, double> lin_;
  std::map<std::pair<int, int>, double> quad_;
};

// Scalar helpers so step builders can be written once for double and Expr.
inline double as_double(double v) { return v; }

}  // namespace scpv
