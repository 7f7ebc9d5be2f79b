#pragma once

// Explicit mixed-integer bilinear program: maximize a linear objective over variables and
// product variables w = v_i * v_j, subject to linear rows, binaries and implications.

#include "scpv/expr.hpp"
#include "scpv/lp.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scpv {

enum class VarRole {
  Param,
  ParamSelector,
  Iterate,
  Primal,
  Slack,
  Dual,
  Product,
  Aux,
  Binary,
  Threshold,
  Farkas,
  Comparator,  ///< minimizer variables z* of the suboptimality metric
};

std::string role_name(VarRole r);

struct ProgVar {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  VarRole role = VarRole::Aux;
  bool binary = false;
  /// Belongs to the metric block (not shared between programs for different K).
  bool metric = false;
};

struct LinearRow {
  std::vector<std::pair<int, double>> terms;
  double lo = -kInf;
  double hi = kInf;
  std::string name;
  double eval(const std::vector<double>& v) const;
};

struct ProductDef {
  int w = -1;
  int i = -1;
  int j = -1;
  bool complementarity = false;  ///< w pinned to 0 with i, j >= 0: branch on i = 0 or j = 0
};

/// binary == value implies row.
struct Implication {
  int binary = -1;
  int value = 1;
  LinearRow row;
};

struct EncodeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class VerificationProgram {
 public:
  std::vector<ProgVar> vars;
  std::vector<LinearRow> rows;
  std::vector<ProductDef> products;
  std::vector<Implication> implications;
  std::vector<std::pair<int, double>> objective;
  double objective_constant = 0.0;
  /// Initial bound of the dual variables (results touching it are not certifying).
  double dual_cap = 0.0;
  /// New variables are tagged as metric-block variables while set.
  bool metric_mode = false;

  int num_vars() const { return static_cast<int>(vars.size()); }
  int add_var(std::string name, double lo, double hi, VarRole role, bool binary = false);
  int add_binary(std::string name, VarRole role = VarRole::Binary) {
    return add_var(std::move(name), 0.0, 1.0, role, true);
  }
  std::vector<int> binaries() const;
  int find_var(const std::string& name) const;

  /// Product variable for v_i * v_j (created on first use, bounds from the operand boxes).
  int product(int i, int j);
  /// Registers an existing variable w as the product v_i * v_j (readers and tests).
  void register_product(int w, int i, int j, bool complementarity);
  /// Linear form over variables and products; the constant goes to `constant`.
  std::vector<std::pair<int, double>> linearize(const Expr& e, double& constant);
  /// lo <= e <= hi.
  int add_row(const Expr& e, double lo, double hi, std::string name);
  void add_implication(int binary, int value, const Expr& e, double lo, double hi,
                       std::string name);
  void set_objective(const Expr& e);

  Interval bounds(const Expr& e) const;
  std::vector<double> lower() const;
  std::vector<double> upper() const;
  double objective_value(const std::vector<double>& v) const;

 private:
  std::map<std::pair<int, int>, int> product_index_;
  std::map<std::string, int> name_index_;
};

struct ProgramViolation {
  double bounds = 0.0;
  double rows = 0.0;
  double products = 0.0;
  double integrality = 0.0;
  double implications = 0.0;
  std::string worst;
  double max() const;
};

/// Largest violation of each constraint class at `v` (products recomputed exactly).
ProgramViolation check_assignment(const VerificationProgram& prog, const std::vector<double>& v);

/// Sets every product variable to the product of its operands.
void recompute_products(const VerificationProgram& prog, std::vector<double>& v);

/// Big-M for an implication row: returns (M for the lo side, M for the hi side), each the
/// worst violation of that side over the variable bounds. Throws EncodeError when infinite.
std::pair<double, double> big_m(const Implication& imp, const std::vector<double>& lo,
                                const std::vector<double>& hi);

}  // namespace scpv
