#include "scpv/expr.hpp"

namespace scpv {

double mul_bound(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

Interval operator*(Interval a, Interval b) {
  const double p[4] = {mul_bound(a.lo, b.lo), mul_bound(a.lo, b.hi), mul_bound(a.hi, b.lo),
                       mul_bound(a.hi, b.hi)};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

Interval square(Interval a) {
  const double l2 = mul_bound(a.lo, a.lo), h2 = mul_bound(a.hi, a.hi);
  if (a.lo >= 0) return {l2, h2};
  if (a.hi <= 0) return {h2, l2};
  return {0.0, std::max(l2, h2)};
}

Interval hull(Interval a, Interval b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }
Interval intersect(Interval a, Interval b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

void Expr::prune() {
  for (auto it = lin_.begin(); it != lin_.end();) it = it->second == 0.0 ? lin_.erase(it) : ++it;
  for (auto it = quad_.begin(); it != quad_.end();)
    it = it->second == 0.0 ? quad_.erase(it) : ++it;
}

Expr& Expr::operator+=(const Expr& o) {
  constant_ += o.constant_;
  for (const auto& [i, a] : o.lin_) lin_[i] += a;
  for (const auto& [ij, q] : o.quad_) quad_[ij] += q;
  prune();
  return *this;
}

Expr& Expr::operator-=(const Expr& o) {
  constant_ -= o.constant_;
  for (const auto& [i, a] : o.lin_) lin_[i] -= a;
  for (const auto& [ij, q] : o.quad_) quad_[ij] -= q;
  prune();
  return *this;
}

Expr& Expr::operator*=(double s) {
  if (s == 0.0) {
    *this = Expr();
    return *this;
  }
  constant_ *= s;
  for (auto& [i, a] : lin_) a *= s;
  for (auto& [ij, q] : quad_) q *= s;
  return *this;
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.degree() + b.degree() > 2) throw DegreeError("expression degree exceeds 2");
  if (a.is_constant()) return b * a.constant_;
  if (b.is_constant()) return a * b.constant_;
  Expr out;
  out.constant_ = a.constant_ * b.constant_;
  for (const auto& [i, c] : a.lin_) out.lin_[i] += c * b.constant_;
  for (const auto& [i, c] : b.lin_) out.lin_[i] += c * a.constant_;
  for (const auto& [i, ci] : a.lin_)
    for (const auto& [j, cj] : b.lin_) out.quad_[{std::min(i, j), std::max(i, j)}] += ci * cj;
  out.prune();
  return out;
}

double Expr::eval(const std::vector<double>& v) const {
  double s = constant_;
  for (const auto& [i, a] : lin_) s += a * v[i];
  for (const auto& [ij, q] : quad_) s += q * v[ij.first] * v[ij.second];
  return s;
}

Interval Expr::bounds(const std::vector<double>& lo, const std::vector<double>& hi) const {
  Interval s = Interval::point(constant_);
  for (const auto& [i, a] : lin_) s = s + a * Interval{lo[i], hi[i]};
  for (const auto& [ij, q] : quad_) {
    const Interval xi{lo[ij.first], hi[ij.first]};
    const Interval t = ij.first == ij.second ? square(xi) : xi * Interval{lo[ij.second], hi[ij.second]};
    s = s + q * t;
  }
  return s;
}

}  // namespace scpv
