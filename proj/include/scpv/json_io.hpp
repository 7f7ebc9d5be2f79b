#pragma once

// JSON forms of problems (the problem-file format), traces, reports, programs and solver
// results. Infinite numbers are written as the strings "inf" / "-inf".

#include "json.hpp"
#include "scpv/globopt.hpp"
#include "scpv/model.hpp"
#include "scpv/program.hpp"
#include "scpv/qp.hpp"
#include "scpv/scprun.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace scpv {

using Json = nlohmann::ordered_json;

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Everything a problem file describes.
struct ProblemFile {
  ParametricProblem problem;
  AlgorithmSchedule schedule;
  ParameterSet pset;
  std::optional<PerformanceMetric> metric;
  bool final_feasible = false;
};

Json problem_to_json(const ProblemFile& f);
/// Throws ConfigError on missing fields or bad shapes.
ProblemFile problem_from_json(const Json& j);
ProblemFile load_problem_file(const std::string& path);
void save_json(const Json& j, const std::string& path);
Json load_json(const std::string& path);

Json vec_json(const Vec& v);
Json num_json(double v);
double json_num(const Json& j);

Json trace_json(const IterateTrace& trace);
Json report_json(const SampleMaxReport& report);
Json qp_solution_json(const QPSolution& sol);
Json program_json(const VerificationProgram& prog);
/// `prog` (optional) names the witness entries.
Json global_result_json(const GlobalResult& r, const VerificationProgram* prog = nullptr);
Json bounds_json(const VerificationProgram& prog, const Bounds& b);

}  // namespace scpv
