#include "scpv/program.hpp"

#include <cmath>

namespace scpv {

std::string role_name(VarRole r) {
  switch (r) {
    case VarRole::Param: return "param";
    case VarRole::ParamSelector: return "param_selector";
    case VarRole::Iterate: return "iterate";
    case VarRole::Primal: return "primal";
    case VarRole::Slack: return "slack";
    case VarRole::Dual: return "dual";
    case VarRole::Product: return "product";
    case VarRole::Aux: return "aux";
    case VarRole::Binary: return "binary";
    case VarRole::Threshold: return "threshold";
    case VarRole::Farkas: return "farkas";
    case VarRole::Comparator: return "comparator";
  }
  return "aux";
}

double LinearRow::eval(const std::vector<double>& v) const {
  double s = 0.0;
  for (const auto& [i, a] : terms) s += a * v[i];
  return s;
}

int VerificationProgram::add_var(std::string name, double lo, double hi, VarRole role,
                                 bool binary) {
  if (name_index_.count(name)) throw EncodeError("duplicate variable name " + name);
  if (!(lo <= hi)) throw EncodeError("empty bounds for " + name);
  const int id = num_vars();
  name_index_[name] = id;
  vars.push_back(ProgVar{std::move(name), lo, hi, role, binary, metric_mode});
  return id;
}

std::vector<int> VerificationProgram::binaries() const {
  std::vector<int> out;
  for (int i = 0; i < num_vars(); ++i)
    if (vars[i].binary) out.push_back(i);
  return out;
}

int VerificationProgram::find_var(const std::string& name) const {
  const auto it = name_index_.find(name);
  return it == name_index_.end() ? -1 : it->second;
}

int VerificationProgram::product(int i, int j) {
  if (i > j) std::swap(i, j);
  const auto it = product_index_.find({i, j});
  if (it != product_index_.end()) return it->second;
  const Interval a{vars[i].lo, vars[i].hi}, b{vars[j].lo, vars[j].hi};
  if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi))
    throw EncodeError("unbounded product operand: " + (std::isfinite(a.width()) ? vars[j].name
                                                                                 : vars[i].name));
  const Interval w = i == j ? square(a) : a * b;
  const std::string name =
      i == j ? "sq_" + vars[i].name : "w_" + vars[i].name + "_" + vars[j].name;
  const bool saved = metric_mode;
  metric_mode = vars[i].metric || vars[j].metric;
  const int id = add_var(name, w.lo, w.hi, VarRole::Product);
  metric_mode = saved;
  products.push_back(ProductDef{id, i, j, false});
  product_index_[{i, j}] = id;
  return id;
}

void VerificationProgram::register_product(int w, int i, int j, bool complementarity) {
  if (i > j) std::swap(i, j);
  if (product_index_.count({i, j})) throw EncodeError("duplicate product for " + vars[w].name);
  products.push_back(ProductDef{w, i, j, complementarity});
  product_index_[{i, j}] = w;
}

std::vector<std::pair<int, double>> VerificationProgram::linearize(const Expr& e, double& constant) {
  constant = e.constant();
  std::map<int, double> acc;
  for (const auto& [i, a] : e.linear()) acc[i] += a;
  for (const auto& [ij, q] : e.quadratic()) acc[product(ij.first, ij.second)] += q;
  std::vector<std::pair<int, double>> out;
  for (const auto& [i, a] : acc)
    if (a != 0.0) out.emplace_back(i, a);
  return out;
}

int VerificationProgram::add_row(const Expr& e, double lo, double hi, std::string name) {
  double c;
  LinearRow row;
  row.terms = linearize(e, c);
  row.lo = lo - c;
  row.hi = hi - c;
  row.name = std::move(name);
  rows.push_back(std::move(row));
  return static_cast<int>(rows.size()) - 1;
}

void VerificationProgram::add_implication(int binary, int value, const Expr& e, double lo,
                                          double hi, std::string name) {
  double c;
  Implication imp;
  imp.binary = binary;
  imp.value = value;
  imp.row.terms = linearize(e, c);
  imp.row.lo = lo - c;
  imp.row.hi = hi - c;
  imp.row.name = std::move(name);
  big_m(imp, lower(), upper());  // fail loudly on infinite M
  implications.push_back(std::move(imp));
}

void VerificationProgram::set_objective(const Expr& e) { objective = linearize(e, objective_constant); }

Interval VerificationProgram::bounds(const Expr& e) const { return e.bounds(lower(), upper()); }

std::vector<double> VerificationProgram::lower() const {
  std::vector<double> v(vars.size());
  for (size_t i = 0; i < vars.size(); ++i) v[i] = vars[i].lo;
  return v;
}

std::vector<double> VerificationProgram::upper() const {
  std::vector<double> v(vars.size());
  for (size_t i = 0; i < vars.size(); ++i) v[i] = vars[i].hi;
  return v;
}

double VerificationProgram::objective_value(const std::vector<double>& v) const {
  double s = objective_constant;
  for (const auto& [i, a] : objective) s += a * v[i];
  return s;
}

double ProgramViolation::max() const {
  return std::max({bounds, rows, products, integrality, implications});
}

void recompute_products(const VerificationProgram& prog, std::vector<double>& v) {
  for (const auto& p : prog.products) v[p.w] = v[p.i] * v[p.j];
}

namespace {

double row_violation(const LinearRow& r, const std::vector<double>& v) {
  const double a = r.eval(v);
  double viol = 0.0;
  if (a < r.lo) viol = r.lo - a;
  if (a > r.hi) viol = a - r.hi;
  return viol;
}

}  // namespace

ProgramViolation check_assignment(const VerificationProgram& prog, const std::vector<double>& v) {
  ProgramViolation out;
  double worst = -1.0;
  auto note = [&](double val, double& slot, const std::string& what) {
    slot = std::max(slot, val);
    if (val > worst) {
      worst = val;
      out.worst = what;
    }
  };
  if (v.size() != prog.vars.size()) throw std::invalid_argument("assignment size mismatch");
  for (size_t i = 0; i < v.size(); ++i) {
    const auto& x = prog.vars[i];
    if (!std::isfinite(v[i])) {
      note(kInf, out.bounds, "non-finite " + x.name);
      continue;
    }
    note(std::max({0.0, x.lo - v[i], v[i] - x.hi}), out.bounds, "bound " + x.name);
    if (x.binary) note(std::min(std::abs(v[i]), std::abs(v[i] - 1.0)), out.integrality, x.name);
  }
  for (const auto& r : prog.rows) note(row_violation(r, v), out.rows, "row " + r.name);
  for (const auto& p : prog.products)
    note(std::abs(v[p.w] - v[p.i] * v[p.j]), out.products, "product " + prog.vars[p.w].name);
  for (const auto& imp : prog.implications) {
    const double b = std::round(v[imp.binary]);
    if (b == imp.value) note(row_violation(imp.row, v), out.implications, "implication " + imp.row.name);
  }
  return out;
}

std::pair<double, double> big_m(const Implication& imp, const std::vector<double>& lo,
                                const std::vector<double>& hi) {
  Interval a = Interval::point(0.0);
  for (const auto& [i, c] : imp.row.terms) a = a + c * Interval{lo[i], hi[i]};
  double mlo = 0.0, mhi = 0.0;
  if (std::isfinite(imp.row.lo)) mlo = std::max(0.0, imp.row.lo - a.lo);
  if (std::isfinite(imp.row.hi)) mhi = std::max(0.0, a.hi - imp.row.hi);
  if (!std::isfinite(mlo) || !std::isfinite(mhi))
    throw EncodeError("implication " + imp.row.name + " has no finite big-M");
  return {mlo, mhi};
}

}  // namespace scpv
