#include "scpv/json_io.hpp"

#include <cmath>
#include <fstream>

namespace scpv {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) bad(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

Vec read_vec(const Json& j, const std::string& where, int expect = -1) {
  if (!j.is_array()) bad(where, "expected an array");
  Vec v(static_cast<int>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = json_num(j[i]);
  if (expect >= 0 && v.size() != expect)
    bad(where, "expected length " + std::to_string(expect) + ", got " + std::to_string(v.size()));
  return v;
}

Mat read_mat(const Json& j, int rows, int cols, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of rows");
  if (static_cast<int>(j.size()) != rows)
    bad(where, "expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const Vec row = read_vec(j[r], where + "[" + std::to_string(r) + "]", cols);
    m.row(r) = row.transpose();
  }
  return m;
}

Json mat_json(const Mat& m) {
  Json j = Json::array();
  for (int r = 0; r < m.rows(); ++r) j.push_back(vec_json(m.row(r).transpose()));
  return j;
}

std::vector<int> read_ints(const Json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of indices");
  std::vector<int> out;
  for (const auto& e : j) {
    if (!e.is_number_integer()) bad(where, "expected integer indices");
    out.push_back(e.get<int>());
  }
  return out;
}

QuadraticForm read_qf(const Json& j, int n, int d, const std::string& where) {
  QuadraticForm q = QuadraticForm::zero(n, d);
  if (!j.is_object()) bad(where, "expected an object");
  if (j.contains("P")) q.P = read_mat(j["P"], n, n, where + ".P");
  if (j.contains("K")) q.K = read_mat(j["K"], n, d, where + ".K");
  if (j.contains("c")) q.c = read_vec(j["c"], where + ".c", n);
  if (j.contains("r")) q.r = read_vec(j["r"], where + ".r", d);
  if (j.contains("r0")) q.r0 = json_num(j["r0"]);
  return q;
}

Json qf_json(const QuadraticForm& q) {
  Json j;
  j["P"] = mat_json(q.P);
  j["K"] = mat_json(q.K);
  j["c"] = vec_json(q.c);
  j["r"] = vec_json(q.r);
  j["r0"] = q.r0;
  return j;
}

Json step_json(const StepSpec& s) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TrustRegionStep>) return {{"type", "trust_region"}, {"rho", v.rho}};
        else if constexpr (std::is_same_v<T, PenalizedCCPStep>) return {{"type", "penalized_ccp"}, {"tau", v.tau}};
        else if constexpr (std::is_same_v<T, ProxLinearStep>) return {{"type", "prox_linear"}, {"rho", v.rho}};
        else if constexpr (std::is_same_v<T, RelaxStep>) return {{"type", "relax"}, {"lambda", v.lambda}};
        else if constexpr (std::is_same_v<T, RoundStep>) return {{"type", "round"}};
        else return {{"type", "polish"}};
      },
      s);
}

StepSpec read_step(const Json& j, const std::string& where) {
  const std::string t = field(j, "type", where).get<std::string>();
  auto num = [&](const char* k) { return json_num(field(j, k, where)); };
  if (t == "trust_region") return TrustRegionStep{num("rho")};
  if (t == "penalized_ccp") return PenalizedCCPStep{num("tau")};
  if (t == "prox_linear") return ProxLinearStep{num("rho")};
  if (t == "relax") return RelaxStep{j.contains("lambda") ? num("lambda") : 0.0};
  if (t == "round") return RoundStep{};
  if (t == "polish") return PolishStep{};
  bad(where, "unknown step type '" + t + "'");
}

}  // namespace

Json num_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double json_num(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::nan("");
  }
  throw ConfigError("expected a number, got " + j.dump());
}

Json vec_json(const Vec& v) {
  Json j = Json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(num_json(v(i)));
  return j;
}

Json problem_to_json(const ProblemFile& f) {
  const auto& p = f.problem;
  Json j;
  j["n"] = p.n;
  j["d"] = p.d;
  j["objective"] = qf_json(p.objective);
  j["abs_terms"] = Json::array();
  for (const auto& a : p.abs_terms) j["abs_terms"].push_back({{"weight", a.weight}, {"inner", qf_json(a.inner)}});
  j["ineq"] = Json::array();
  for (const auto& q : p.ineq) j["ineq"].push_back(qf_json(q));
  j["eq"] = Json::array();
  for (const auto& q : p.eq) j["eq"].push_back(qf_json(q));
  j["discrete"] = std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, BinaryConstraint>) return {{"type", "binary"}, {"indices", v.indices}};
        else if constexpr (std::is_same_v<T, SparsityConstraint>) return {{"type", "sparsity"}, {"k", v.k}};
        else if constexpr (std::is_same_v<T, PlusMinusOneConstraint>) return {{"type", "plus_minus_one"}, {"indices", v.indices}};
        else return nullptr;
      },
      p.discrete);
  j["z_bounds"] = {{"lower", vec_json(p.z_bounds.lower)}, {"upper", vec_json(p.z_bounds.upper)}};
  j["parameter_set"] = {{"lower", vec_json(f.pset.lower)},
                        {"upper", vec_json(f.pset.upper)},
                        {"discrete_coords", f.pset.discrete_coords}};
  j["schedule"] = Json::array();
  for (const auto& s : f.schedule.steps) j["schedule"].push_back(step_json(s));
  j["init"] = std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ColdStart>) return {{"type", "cold"}, {"point", vec_json(v.point)}};
        else if constexpr (std::is_same_v<T, WarmStart>) return {{"type", "warm"}, {"point", vec_json(v.point)}};
        else return {{"type", "none"}};
      },
      f.schedule.init);
  if (f.metric) j["metric"] = metric_name(*f.metric);
  j["final_feasible"] = f.final_feasible;
  return j;
}

ProblemFile problem_from_json(const Json& j) {
  const std::string W = "problem";
  ProblemFile f;
  auto& p = f.problem;
  try {
    p.n = field(j, "n", W).get<int>();
    p.d = field(j, "d", W).get<int>();
  } catch (const nlohmann::json::exception& e) {
    bad(W, std::string("n and d must be integers (") + e.what() + ")");
  }
  if (p.n <= 0 || p.d < 0) bad(W, "n must be positive and d nonnegative");
  p.objective = read_qf(field(j, "objective", W), p.n, p.d, "objective");
  if (j.contains("abs_terms"))
    for (size_t i = 0; i < j["abs_terms"].size(); ++i) {
      const auto& a = j["abs_terms"][i];
      const std::string w = "abs_terms[" + std::to_string(i) + "]";
      p.abs_terms.push_back(AbsTerm{a.contains("weight") ? json_num(a["weight"]) : 1.0,
                                    read_qf(field(a, "inner", w), p.n, p.d, w + ".inner")});
    }
  for (const char* key : {"ineq", "eq"}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_array()) bad(key, "expected an array");
    auto& dst = std::string(key) == "ineq" ? p.ineq : p.eq;
    for (size_t i = 0; i < j[key].size(); ++i)
      dst.push_back(read_qf(j[key][i], p.n, p.d, std::string(key) + "[" + std::to_string(i) + "]"));
  }
  if (j.contains("discrete") && !j["discrete"].is_null()) {
    const auto& dj = j["discrete"];
    const std::string t = field(dj, "type", "discrete").get<std::string>();
    if (t == "binary") p.discrete = BinaryConstraint{read_ints(field(dj, "indices", "discrete"), "discrete.indices")};
    else if (t == "plus_minus_one")
      p.discrete = PlusMinusOneConstraint{read_ints(field(dj, "indices", "discrete"), "discrete.indices")};
    else if (t == "sparsity") p.discrete = SparsityConstraint{field(dj, "k", "discrete").get<int>()};
    else if (t != "none") bad("discrete", "unknown type '" + t + "'");
  }
  const auto& zb = field(j, "z_bounds", W);
  p.z_bounds.lower = read_vec(field(zb, "lower", "z_bounds"), "z_bounds.lower", p.n);
  p.z_bounds.upper = read_vec(field(zb, "upper", "z_bounds"), "z_bounds.upper", p.n);

  const auto& ps = field(j, "parameter_set", W);
  f.pset.lower = read_vec(field(ps, "lower", "parameter_set"), "parameter_set.lower", p.d);
  f.pset.upper = read_vec(field(ps, "upper", "parameter_set"), "parameter_set.upper", p.d);
  if (ps.contains("discrete_coords")) f.pset.discrete_coords = read_ints(ps["discrete_coords"], "parameter_set.discrete_coords");

  const auto& sj = field(j, "schedule", W);
  if (!sj.is_array()) bad("schedule", "expected an array");
  for (size_t i = 0; i < sj.size(); ++i) f.schedule.steps.push_back(read_step(sj[i], "schedule[" + std::to_string(i) + "]"));
  if (j.contains("init") && !j["init"].is_null()) {
    const auto& ij = j["init"];
    const std::string t = field(ij, "type", "init").get<std::string>();
    if (t == "cold") f.schedule.init = ColdStart{read_vec(field(ij, "point", "init"), "init.point", p.n)};
    else if (t == "warm") f.schedule.init = WarmStart{read_vec(field(ij, "point", "init"), "init.point", p.n)};
    else if (t == "none") f.schedule.init = NoInit{};
    else bad("init", "unknown type '" + t + "'");
  }
  if (j.contains("metric")) {
    try {
      f.metric = parse_metric(j["metric"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      bad("metric", e.what());
    }
  }
  if (j.contains("final_feasible")) f.final_feasible = j["final_feasible"].get<bool>();

  const auto rep = validate(p, f.schedule, f.pset);
  if (!rep.ok()) {
    std::string msg;
    for (const auto& s : rep.issues) msg += (msg.empty() ? "" : "; ") + s;
    bad(W, msg);
  }
  return f;
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ProblemFile load_problem_file(const std::string& path) {
  try {
    return problem_from_json(load_json(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void save_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

Json qp_solution_json(const QPSolution& sol) {
  return {{"status", to_string(sol.status)},
          {"iterations", sol.iterations},
          {"u", vec_json(sol.u)},
          {"s", vec_json(sol.s)},
          {"y", vec_json(sol.y)},
          {"residuals",
           {{"primal", num_json(sol.residuals.primal)},
            {"dual", num_json(sol.residuals.dual)},
            {"comp", num_json(sol.residuals.comp)},
            {"sign", num_json(sol.residuals.sign)}}}};
}

Json trace_json(const IterateTrace& t) {
  Json j;
  j["x"] = vec_json(t.x);
  j["has_initial"] = t.has_initial;
  j["iterates"] = Json::array();
  for (const auto& z : t.iterates) j["iterates"].push_back(vec_json(z));
  j["objective"] = Json::array();
  for (double v : t.objective) j["objective"].push_back(num_json(v));
  j["violation"] = Json::array();
  for (double v : t.violation) j["violation"].push_back(num_json(v));
  j["steps"] = Json::array();
  for (const auto& s : t.steps) {
    Json sj{{"step", step_name(s.spec)}};
    if (s.is_round) {
      if (!s.round.state.support.empty() || s.round.round_threshold_t != 0.0)
        sj["threshold"] = s.round.round_threshold_t;
    } else {
      sj["qp"] = qp_solution_json(s.solution);
    }
    j["steps"].push_back(std::move(sj));
  }
  j["infeasible_step"] = t.infeasible_step;
  return j;
}

Json report_json(const SampleMaxReport& r) {
  Json j;
  j["metric"] = metric_name(r.metric);
  j["num_samples"] = r.num_samples;
  j["seed"] = r.seed;
  j["first_iteration"] = r.first_iteration;
  j["max_per_iter"] = Json::array();
  for (double v : r.max_per_iter) j["max_per_iter"].push_back(num_json(v));
  j["argmax"] = Json::array();
  for (const auto& x : r.argmax) j["argmax"].push_back(vec_json(x));
  j["failed_samples"] = r.failed_samples;
  j["failures"] = r.failures;
  return j;
}

Json program_json(const VerificationProgram& prog) {
  Json j;
  j["dual_cap"] = prog.dual_cap;
  j["vars"] = Json::array();
  for (const auto& v : prog.vars)
    j["vars"].push_back({{"name", v.name},
                         {"lo", num_json(v.lo)},
                         {"hi", num_json(v.hi)},
                         {"role", role_name(v.role)},
                         {"binary", v.binary},
                         {"metric", v.metric}});
  auto terms = [](const std::vector<std::pair<int, double>>& t) {
    Json a = Json::array();
    for (const auto& [i, c] : t) a.push_back({i, c});
    return a;
  };
  j["rows"] = Json::array();
  for (const auto& r : prog.rows)
    j["rows"].push_back({{"name", r.name}, {"lo", num_json(r.lo)}, {"hi", num_json(r.hi)}, {"terms", terms(r.terms)}});
  j["products"] = Json::array();
  for (const auto& p : prog.products)
    j["products"].push_back({{"w", p.w}, {"i", p.i}, {"j", p.j}, {"complementarity", p.complementarity}});
  j["implications"] = Json::array();
  for (const auto& im : prog.implications)
    j["implications"].push_back({{"binary", im.binary},
                                 {"value", im.value},
                                 {"name", im.row.name},
                                 {"lo", num_json(im.row.lo)},
                                 {"hi", num_json(im.row.hi)},
                                 {"terms", terms(im.row.terms)}});
  j["objective"] = {{"terms", terms(prog.objective)}, {"constant", prog.objective_constant}};
  return j;
}

Json global_result_json(const GlobalResult& r, const VerificationProgram* prog) {
  Json j;
  j["status"] = to_string(r.status);
  j["best_value"] = num_json(r.best_value);
  j["upper_bound"] = num_json(r.upper_bound);
  j["gap"] = num_json(r.gap);
  j["nodes"] = r.nodes;
  j["seconds"] = r.seconds;
  j["dual_cap_active"] = r.dual_cap_active;
  if (r.has_incumbent()) {
    if (prog) {
      Json w = Json::object();
      for (int i = 0; i < prog->num_vars(); ++i)
        if (prog->vars[i].role == VarRole::Param) w[prog->vars[i].name] = num_json(r.witness[i]);
      j["witness_params"] = std::move(w);
    }
    Json all = Json::array();
    for (double v : r.witness) all.push_back(num_json(v));
    j["witness"] = std::move(all);
  }
  return j;
}

Json bounds_json(const VerificationProgram& prog, const Bounds& b) {
  Json a = Json::array();
  for (int i = 0; i < prog.num_vars(); ++i)
    a.push_back({{"name", prog.vars[i].name},
                 {"role", role_name(prog.vars[i].role)},
                 {"declared", {num_json(prog.vars[i].lo), num_json(prog.vars[i].hi)}},
                 {"tightened", {num_json(b.lo[i]), num_json(b.hi[i])}}});
  return a;
}

}  // namespace scpv
