#pragma once

// Generators for the seven experiment families.

#include "scpv/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace scpv {

struct UnknownFamily : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Dimensions left at -1 take the reduced-scale default of the family. `constants`
/// overrides family constants by name (see family_constants()).
struct FamilyConfig {
  std::string family;
  int n = -1;
  int d = -1;
  int T = -1;
  int k = -1;
  /// Iterative steps in the schedule (-1: family default).
  int K = -1;
  std::uint64_t seed = 0;
  std::map<std::string, double> constants;
  /// Warm start from the minimizer at the center of X instead of the cold start.
  std::optional<bool> warm_start;
  std::optional<Vec> x_lower;
  std::optional<Vec> x_upper;
};

struct FamilyInstance {
  ParametricProblem problem;
  AlgorithmSchedule schedule;
  ParameterSet pset;
  /// Metric studied for the family, and whether the final iterate is feasible by
  /// construction (required for suboptimality).
  PerformanceMetric metric = PerformanceMetric::Suboptimality;
  bool final_feasible = false;
};

const std::vector<std::string>& family_ids();
/// Constant names accepted by `FamilyConfig::constants` with their defaults.
std::map<std::string, double> family_constants(const std::string& family);

FamilyInstance generate(const FamilyConfig& config);

/// Fixed converter dynamics (4 states, 1 input).
Mat power_converter_A();
Mat power_converter_B();
/// Trajectory cost 1/2 sum_{t=1..T} (s_t - s_ref)' Q (s_t - s_ref) by simulation.
double power_converter_simulated_cost(const Vec& x, const Vec& u);
/// x-only part of that cost dropped from the condensed objective: simulated cost equals
/// condensed objective plus 1/2 x' M x.
Mat power_converter_dropped_quadratic(int T);

}  // namespace scpv
