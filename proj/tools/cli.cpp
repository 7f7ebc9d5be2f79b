#include "cli.hpp"

#include "CLI11.hpp"
#include "scpv/encoder.hpp"
#include "scpv/families.hpp"
#include "scpv/globopt.hpp"
#include "scpv/json_io.hpp"
#include "scpv/lpfile.hpp"
#include "scpv/oracle.hpp"
#include "scpv/scprun.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace scpv::cli {

namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string command;
  // Problem source: exactly one of family / problem_file.
  std::string family;
  std::string problem_file;
  FamilyConfig fam;
  std::map<std::string, double> constants;
  std::vector<std::string> const_pairs;
  bool warm = false, cold = false;

  std::string metric;
  std::string inexact = "exact";
  int K = -1;
  bool declare_feasible = false;

  double rel_gap = 1e-4;
  double abs_gap = 1e-9;
  double time_limit = 60.0;
  long node_limit = 2000000;
  bool obbt = false;

  int samples = 0;
  std::uint64_t seed = 0;
  std::string out = ".";
  bool verbose = false;

  std::vector<double> x;           // run
  std::vector<std::string> grid;   // farkas
  bool json_dump = false;          // export
};

struct Loaded {
  ParametricProblem problem;
  AlgorithmSchedule schedule;
  ParameterSet pset;
  PerformanceMetric metric;
  bool final_feasible = false;
};

struct CommandError : std::runtime_error {
  int code;
  CommandError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

std::set<std::string> all_constant_names() {
  std::set<std::string> s;
  for (const auto& f : family_ids())
    for (const auto& [k, v] : family_constants(f)) s.insert(k);
  return s;
}

PerformanceMetric metric_flag(const std::string& s) {
  if (s == "subopt" || s == "suboptimality") return PerformanceMetric::Suboptimality;
  if (s == "violation") return PerformanceMetric::ViolationSquaredL2;
  if (s == "farkas") return PerformanceMetric::SubproblemFeasibility;
  throw ConfigError("unknown metric '" + s + "' (subopt, violation, farkas)");
}

FamilyConfig family_config(const RunConfig& c, const std::map<std::string, double>& extra = {}) {
  FamilyConfig f = c.fam;
  f.family = c.family;
  f.seed = c.seed;
  f.constants = c.constants;
  for (const auto& [k, v] : extra) f.constants[k] = v;
  if (c.warm) f.warm_start = true;
  if (c.cold) f.warm_start = false;
  if (c.K >= 0) f.K = std::max(c.K, 0);
  return f;
}

Loaded load(const RunConfig& c, const std::map<std::string, double>& extra = {}) {
  Loaded L;
  std::optional<PerformanceMetric> file_metric;
  if (!c.family.empty()) {
    FamilyInstance fi;
    try {
      fi = generate(family_config(c, extra));
    } catch (const UnknownFamily& e) {
      throw ConfigError(e.what());
    }
    L.problem = std::move(fi.problem);
    L.schedule = std::move(fi.schedule);
    L.pset = std::move(fi.pset);
    file_metric = fi.metric;
    L.final_feasible = fi.final_feasible;
  } else {
    ProblemFile pf = load_problem_file(c.problem_file);
    L.problem = std::move(pf.problem);
    L.schedule = std::move(pf.schedule);
    L.pset = std::move(pf.pset);
    file_metric = pf.metric;
    L.final_feasible = pf.final_feasible;
  }
  if (!c.metric.empty())
    L.metric = metric_flag(c.metric);
  else if (file_metric)
    L.metric = *file_metric;
  else
    throw ConfigError("--metric is required for this problem file");
  L.final_feasible = L.final_feasible || c.declare_feasible;
  if (c.K > L.schedule.iterative_count())
    throw ConfigError("--K " + std::to_string(c.K) + " exceeds the " +
                      std::to_string(L.schedule.iterative_count()) + " iterative steps of the schedule");
  return L;
}

int K_max(const RunConfig& c, const Loaded& L) { return c.K >= 0 ? c.K : L.schedule.iterative_count(); }

GlobalOptions global_options(const RunConfig& c, std::ostream& err) {
  GlobalOptions o;
  o.rel_gap = c.rel_gap;
  o.abs_gap = c.abs_gap;
  o.time_limit = c.time_limit;
  o.node_limit = c.node_limit;
  o.obbt = c.obbt;
  if (c.verbose) o.log = &err;
  return o;
}

EncoderOptions encoder_options(const Loaded& L) {
  EncoderOptions e;
  e.final_feasibility_declared = L.final_feasible;
  return e;
}

fs::path out_dir(const RunConfig& c) {
  fs::path p(c.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  const fs::path probe = p / ".scpverify_probe";
  {
    std::ofstream t(probe);
    if (!t) throw ConfigError("output directory " + p.string() + " is not writable");
  }
  fs::remove(probe, ec);
  return p;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << s;
  if (!f) throw ConfigError("write failed: " + p.string());
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

bool certified(GlobalStatus s) { return s == GlobalStatus::Converged || s == GlobalStatus::GapReached || s == GlobalStatus::Infeasible; }

// ---- subcommands ----

int cmd_run(const RunConfig& c, std::ostream& out) {
  const Loaded L = load(c);
  const fs::path dir = out_dir(c);
  Vec x = L.pset.center();
  if (!c.x.empty()) {
    if (static_cast<int>(c.x.size()) != L.pset.dim())
      throw ConfigError("--x needs " + std::to_string(L.pset.dim()) + " entries");
    x = Eigen::Map<const Vec>(c.x.data(), static_cast<int>(c.x.size()));
  }
  const AlgorithmSchedule sched = c.K >= 0 ? L.schedule.truncated(c.K) : L.schedule;
  RunOptions ro;
  ro.stop_on_infeasible = L.metric != PerformanceMetric::SubproblemFeasibility;
  const IterateTrace tr = run_schedule(L.problem, sched, x, ro);
  Json j = trace_json(tr);
  if (L.metric == PerformanceMetric::Suboptimality) {
    const auto orc = reference_oracle(L.problem, x, oracle_for(L.problem));
    j["fstar"] = num_json(orc.value);
    Json m = Json::array();
    for (double v : trace_metric(L.problem, tr, L.metric, orc.value)) m.push_back(num_json(v));
    j["metric"] = std::move(m);
  } else {
    Json m = Json::array();
    for (double v : trace_metric(L.problem, tr, L.metric)) m.push_back(num_json(v));
    j["metric"] = std::move(m);
  }
  save_json(j, (dir / "trace.json").string());
  write_text(dir / "trace.csv", trace_csv(tr));
  out << "wrote " << (dir / "trace.json").string() << " and trace.csv (" << tr.iterates.size()
      << " iterates)\n";
  return Ok;
}

SampleMaxReport do_sample(const Loaded& L, const AlgorithmSchedule& sched, int samples, std::uint64_t seed) {
  SampleOptions so;
  so.oracle = oracle_for(L.problem);
  return sample_maximum(L.problem, sched, L.pset, L.metric, samples, seed, so);
}

int cmd_sample(const RunConfig& c, std::ostream& out) {
  const Loaded L = load(c);
  const fs::path dir = out_dir(c);
  const int n = c.samples > 0 ? c.samples : 100;
  const AlgorithmSchedule sched = c.K >= 0 ? L.schedule.truncated(c.K) : L.schedule;
  const SampleMaxReport r = do_sample(L, sched, n, c.seed);
  save_json(report_json(r), (dir / "sample.json").string());
  write_text(dir / "sample.csv", report_csv(r));
  out << "sample maximum over " << r.num_samples << " samples:";
  for (double v : r.max_per_iter) out << " " << fmt(v);
  out << "\n";
  if (!r.failed_samples.empty()) out << r.failed_samples.size() << " samples failed\n";
  return Ok;
}

int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Loaded L = load(c);
  const fs::path dir = out_dir(c);
  const auto inexact = InexactnessModel::parse(c.inexact);
  const auto res = verify_sequential(L.metric, L.problem, L.schedule, L.pset, inexact, K_max(c, L),
                                     encoder_options(L), global_options(c, err));

  // Sampled lower bounds for the same truncated schedules.
  std::map<int, double> sampled;
  if (c.samples > 0)
    for (const auto& s : res) {
      const auto rep = do_sample(L, L.schedule.truncated(s.K), c.samples, c.seed);
      if (!rep.max_per_iter.empty()) sampled[s.K] = rep.max_per_iter.back();
    }

  Json j;
  j["metric"] = metric_name(L.metric);
  j["inexact"] = inexact.str();
  j["results"] = Json::array();
  std::ostringstream csv;
  csv << "K,delta,upper_bound,status" << (sampled.empty() ? "" : ",sample_max") << "\n";
  bool uncertified = false, crossfail = false;
  for (const auto& s : res) {
    Json e = global_result_json(s.result);
    e["K"] = s.K;
    csv << s.K << ',' << fmt(s.result.best_value) << ',' << fmt(s.result.upper_bound) << ','
        << to_string(s.result.status);
    if (auto it = sampled.find(s.K); it != sampled.end()) {
      const double tol = 1e-6 * std::max(1.0, std::abs(s.result.upper_bound));
      const bool ok = it->second <= s.result.upper_bound + tol;
      e["sample_max"] = num_json(it->second);
      e["cross_check"] = ok;
      csv << ',' << fmt(it->second);
      if (!ok) {
        crossfail = true;
        err << "cross-check failed at K=" << s.K << ": sample " << it->second << " > bound "
            << s.result.upper_bound << "\n";
      }
    }
    csv << "\n";
    uncertified = uncertified || !certified(s.result.status);
    if (s.result.dual_cap_active)
      err << "warning: K=" << s.K << " result touches the dual cap; not a certificate\n";
    out << "K=" << s.K << " delta=" << fmt(s.result.best_value) << " bound="
        << fmt(s.result.upper_bound) << " " << to_string(s.result.status) << " nodes=" << s.result.nodes
        << " t=" << s.result.seconds << "s\n";
    j["results"].push_back(std::move(e));
  }
  save_json(j, (dir / "verify.json").string());
  write_text(dir / "verify.csv", csv.str());
  if (crossfail) return CrossCheckFailed;
  return uncertified ? NoCertificate : Ok;
}

struct GridAxis {
  std::string name;
  std::vector<double> values;
};

GridAxis parse_axis(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--grid expects NAME=v1,v2,...");
  GridAxis a{s.substr(0, eq), {}};
  std::stringstream ss(s.substr(eq + 1));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t used = 0;
      a.values.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("--grid value '" + tok + "' is not a number");
    }
  }
  if (a.values.empty()) throw ConfigError("--grid " + a.name + " has no values");
  return a;
}

int cmd_farkas(RunConfig c, std::ostream& out, std::ostream& err) {
  c.metric = "farkas";
  std::vector<GridAxis> axes;
  for (const auto& g : c.grid) axes.push_back(parse_axis(g));
  if (axes.size() > 2) throw ConfigError("--grid takes at most two axes");
  if (!axes.empty() && c.family.empty()) throw ConfigError("--grid needs --family");
  if (!c.family.empty()) {
    const auto known = family_constants(c.family);
    for (const auto& a : axes)
      if (!known.count(a.name)) throw ConfigError("family " + c.family + " has no constant " + a.name);
  }
  const fs::path dir = out_dir(c);

  std::vector<std::map<std::string, double>> configs{{}};
  for (const auto& a : axes) {
    std::vector<std::map<std::string, double>> next;
    for (const auto& base : configs)
      for (double v : a.values) {
        auto m = base;
        m[a.name] = v;
        next.push_back(std::move(m));
      }
    configs = std::move(next);
  }

  Json j = Json::array();
  std::ostringstream csv;
  for (const auto& a : axes) csv << a.name << ',';
  csv << "gamma,upper_bound,status,verdict\n";
  bool uncertified = false;
  for (const auto& cfg : configs) {
    const Loaded L = load(c, cfg);
    const EncodedProgram enc = build_program(L.metric, L.problem, L.schedule, L.pset,
                                             InexactnessModel::parse(c.inexact), -1, encoder_options(L));
    GlobalOptions o = global_options(c, err);
    o.callback = forward_incumbent(enc, L.problem, L.pset, oracle_for(L.problem));
    const GlobalResult r = solve_global(enc.prog, o);
    const double tol = std::max(c.abs_gap, 1e-9);
    // gamma <= 0 certifies feasibility for every parameter; a positive incumbent comes with
    // an explicit certificate.
    std::string verdict = "unknown";
    if (r.upper_bound <= tol) verdict = "feasible";
    else if (r.best_value > tol) verdict = "infeasible";
    uncertified = uncertified || (!certified(r.status) && verdict == "unknown");
    Json e = global_result_json(r, &enc.prog);
    Json cj = Json::object();
    for (const auto& [k, v] : cfg) cj[k] = v;
    e["config"] = std::move(cj);
    e["verdict"] = verdict;
    for (const auto& a : axes) csv << fmt(cfg.at(a.name)) << ',';
    csv << fmt(r.best_value) << ',' << fmt(r.upper_bound) << ',' << to_string(r.status) << ','
        << verdict << "\n";
    out << "gamma=" << fmt(r.best_value) << " bound=" << fmt(r.upper_bound) << " " << verdict;
    for (const auto& [k, v] : cfg) out << " " << k << "=" << v;
    out << "\n";
    j.push_back(std::move(e));
  }
  save_json(j, (dir / "farkas.json").string());
  write_text(dir / "farkas.csv", csv.str());
  return uncertified ? NoCertificate : Ok;
}

int cmd_export(const RunConfig& c, std::ostream& out) {
  const Loaded L = load(c);
  const fs::path dir = out_dir(c);
  const auto inexact = InexactnessModel::parse(c.inexact);
  const EncodedProgram enc = build_program(L.metric, L.problem, L.schedule, L.pset, inexact,
                                           c.K, encoder_options(L));
  const std::string stem = "program_K" + std::to_string(K_max(c, L));
  const fs::path lp = dir / (stem + ".lp");
  write_lp(enc.prog, lp.string());
  // Round trip through the reader before reporting success.
  const VerificationProgram back = read_lp(lp.string());
  bool same = back.num_vars() == enc.prog.num_vars() && back.rows.size() == enc.prog.rows.size() &&
              back.binaries().size() == enc.prog.binaries().size() &&
              back.products.size() == enc.prog.products.size();
  for (int i = 0; same && i < back.num_vars(); ++i)
    same = back.vars[i].lo == enc.prog.vars[i].lo && back.vars[i].hi == enc.prog.vars[i].hi;
  if (!same) throw CommandError(Failure, "LP round trip changed the program structure");
  if (c.json_dump) save_json(program_json(enc.prog), (dir / (stem + ".json")).string());
  ProblemFile pf{L.problem, L.schedule, L.pset, L.metric, L.final_feasible};
  save_json(problem_to_json(pf), (dir / "problem.json").string());
  out << "wrote " << lp.string() << " (" << enc.prog.num_vars() << " vars, " << enc.prog.rows.size()
      << " rows, " << enc.prog.products.size() << " products, " << enc.prog.binaries().size()
      << " binaries)\n";
  return Ok;
}

int cmd_obbt(const RunConfig& c, std::ostream& out) {
  const Loaded L = load(c);
  const fs::path dir = out_dir(c);
  const EncodedProgram enc = build_program(L.metric, L.problem, L.schedule, L.pset,
                                           InexactnessModel::parse(c.inexact), c.K, encoder_options(L));
  const Bounds b = Bounds::of(enc.prog);
  if (Bounds fb = b; !interval_propagate(enc.prog, fb)) throw CommandError(Failure, "the program is infeasible");
  ObbtOptions oo;
  oo.time_limit = c.time_limit;
  ObbtStats st;
  const Bounds t = obbt_pass(enc.prog, b, oo, &st);
  Json j;
  j["solved"] = st.solved;
  j["tightened"] = st.tightened;
  j["duals_tightened"] = st.duals_tightened;
  j["bounds"] = bounds_json(enc.prog, t);
  save_json(j, (dir / "obbt.json").string());
  out << "obbt: " << st.solved << " LPs, " << st.tightened << " bounds tightened ("
      << st.duals_tightened << " dual)\n";
  return Ok;
}

void add_common(CLI::App* sub, RunConfig& c, std::map<std::string, std::optional<double>>& consts) {
  auto* fam = sub->add_option("--family", c.family, "family id")->check(CLI::IsMember(family_ids()));
  auto* file = sub->add_option("--problem-file", c.problem_file, "JSON problem file");
  fam->excludes(file);
  file->excludes(fam);
  sub->add_option("--n", c.fam.n, "family dimension n");
  sub->add_option("--d", c.fam.d, "family parameter dimension d");
  sub->add_option("--T", c.fam.T, "family horizon T");
  sub->add_option("--k", c.fam.k, "sparsity cardinality k");
  sub->add_flag("--warm-start", c.warm, "warm start at the set center");
  sub->add_flag("--cold-start", c.cold, "cold start");
  sub->add_option("--const", c.const_pairs, "family constant NAME=VALUE");
  for (const auto& name : all_constant_names())
    sub->add_option("--" + name, consts[name], "family constant " + name);
  sub->add_option("--metric", c.metric, "subopt | violation | farkas");
  sub->add_option("--inexact", c.inexact, "exact | dist:EPS | kkt:EPS");
  sub->add_option("--K", c.K, "number of iterative steps");
  sub->add_flag("--declare-feasible", c.declare_feasible, "the final iterate is feasible by construction");
  sub->add_option("--rel-gap", c.rel_gap);
  sub->add_option("--abs-gap", c.abs_gap);
  sub->add_option("--time-limit", c.time_limit, "seconds per global solve");
  sub->add_option("--node-limit", c.node_limit);
  sub->add_flag("--obbt", c.obbt, "root OBBT pass");
  sub->add_option("--samples", c.samples, "number of sampled parameters");
  sub->add_option("--seed", c.seed, "seed for family data and sampling");
  sub->add_option("--out", c.out, "output directory");
  sub->add_flag("-v,--verbose", c.verbose, "solver log on stderr");
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Worst-case verification of sequential convex programming schedules", "scpverify"};
  app.require_subcommand(1);
  RunConfig c;
  std::map<std::string, std::optional<double>> consts;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"run", "forward trace at one parameter"},
           {"sample", "sample maximum of the metric"},
           {"verify", "verified worst case for K = 0..K"},
           {"farkas", "subproblem feasibility over a grid of configurations"},
           {"export", "write the verification program as an LP file"},
           {"obbt", "bound tightening on the verification program"}}) {
    CLI::App* s = app.add_subcommand(name, help);
    add_common(s, c, consts);
    subs[name] = s;
  }
  subs["run"]->add_option("--x", c.x, "parameter value")->delimiter(',');
  subs["farkas"]->add_option("--grid", c.grid, "NAME=v1,v2,... (twice for a 2-D grid)");
  subs["export"]->add_flag("--json", c.json_dump, "also dump the program as JSON");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? Ok : ConfigErr;
  }
  for (const auto& [name, s] : subs)
    if (s->parsed()) c.command = name;

  try {
    if (c.family.empty() == c.problem_file.empty())
      throw ConfigError("exactly one of --family and --problem-file is required");
    for (const auto& [k, v] : consts)
      if (v) c.constants[k] = *v;
    for (const auto& p : c.const_pairs) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw ConfigError("--const expects NAME=VALUE");
      c.constants[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
    }
    if (!c.family.empty()) {
      const auto known = family_constants(c.family);
      for (const auto& [k, v] : c.constants)
        if (!known.count(k)) throw ConfigError("family " + c.family + " has no constant " + k);
    } else if (!c.constants.empty()) {
      throw ConfigError("family constants need --family");
    }
    if (c.warm && c.cold) throw ConfigError("--warm-start and --cold-start are exclusive");

    if (c.command == "run") return cmd_run(c, out);
    if (c.command == "sample") return cmd_sample(c, out);
    if (c.command == "verify") return cmd_verify(c, out, err);
    if (c.command == "farkas") return cmd_farkas(c, out, err);
    if (c.command == "export") return cmd_export(c, out);
    if (c.command == "obbt") return cmd_obbt(c, out);
    throw ConfigError("no command");
  } catch (const CommandError& e) {
    err << "error: " << e.what() << "\n";
    return e.code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return ConfigErr;
  } catch (const LPParseError& e) {
    err << "error: " << e.what() << "\n";
    return Failure;
  } catch (const std::invalid_argument& e) {
    // Dimension errors, unknown families, bad inexactness strings, encoder preconditions.
    err << "config error: " << e.what() << "\n";
    return ConfigErr;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return Failure;
  }
}

}  // namespace scpv::cli
