#include "scpv/scprun.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace scpv {

std::pair<IterState<double>, StepArtifacts> apply_step(const StepSpec& spec,
                                                       const ParametricProblem& problem,
                                                       const IterState<double>& in, const Vec& x,
                                                       const RunOptions& opt) {
  StepArtifacts art;
  art.spec = spec;
  if (std::holds_alternative<RoundStep>(spec)) {
    art.is_round = true;
    art.round = round_forward(problem, in);
    return {art.round.state, std::move(art)};
  }
  art.step_qp = build_step_qp<double>(spec, problem, to_scalars<double>(x), in);
  art.qp = to_standard(art.step_qp);
  art.solution = solve_qp(art.qp, opt.tol, opt.max_iter);
  const QPStatus st = art.solution.status;
  if (st == QPStatus::PrimalInfeasible) {
    if (opt.stop_on_infeasible) throw StepInfeasible(-1, step_name(spec) + " subproblem infeasible");
    return {in, std::move(art)};
  }
  if (st != QPStatus::Optimal)
    throw SolverFailure(-1, step_name(spec) + " subproblem: " + to_string(st));
  const std::vector<double> u(art.solution.u.data(), art.solution.u.data() + art.solution.u.size());
  IterState<double> out = next_state(art.step_qp, u, in);
  return {std::move(out), std::move(art)};
}

std::pair<Vec, StepArtifacts> apply_step(const StepSpec& spec, const ParametricProblem& problem,
                                         const Vec& z_k, const Vec& x, const RunOptions& opt) {
  IterState<double> in;
  in.z = to_scalars<double>(z_k);
  auto [out, art] = apply_step(spec, problem, in, x, opt);
  return {Eigen::Map<const Vec>(out.z.data(), out.z.size()), std::move(art)};
}

IterateTrace run_schedule(const ParametricProblem& problem, const AlgorithmSchedule& schedule,
                          const Vec& x, const RunOptions& opt) {
  if (x.size() != problem.d) throw DimensionError("parameter dimension");
  IterateTrace tr;
  tr.x = x;
  IterState<double> state;
  auto record = [&](const IterState<double>& s) {
    Vec z = Eigen::Map<const Vec>(s.z.data(), s.z.size());
    tr.objective.push_back(eval_objective(problem, z, x));
    tr.violation.push_back(eval_violation(problem, z, x));
    tr.iterates.push_back(std::move(z));
    tr.states.push_back(s);
  };
  if (const auto z0 = initial_point(schedule.init)) {
    state.z = to_scalars<double>(*z0);
    record(state);
  } else {
    tr.has_initial = false;
  }
  for (int k = 0; k < schedule.K(); ++k) {
    try {
      auto [next, art] = apply_step(schedule.steps[k], problem, state, x, opt);
      const bool infeasible = !art.is_round && art.solution.status == QPStatus::PrimalInfeasible;
      tr.steps.push_back(std::move(art));
      if (infeasible) {
        tr.infeasible_step = k;
        return tr;
      }
      state = std::move(next);
      record(state);
    } catch (const StepInfeasible& e) {
      throw StepInfeasible(k, e.what());
    } catch (const SolverFailure& e) {
      throw SolverFailure(k, e.what());
    }
  }
  return tr;
}

double farkas_value(const StandardQP& qp) {
  const Vec y = farkas_certificate(qp.A, qp.b, 1e-12);
  if (!y.size()) return 0.0;
  return std::max(0.0, -qp.b.dot(y));
}

std::vector<double> trace_metric(const ParametricProblem& problem, const IterateTrace& trace,
                                 PerformanceMetric metric, double fstar) {
  (void)problem;
  std::vector<double> out;
  switch (metric) {
    case PerformanceMetric::Suboptimality:
      for (double f : trace.objective) out.push_back(f - fstar);
      break;
    case PerformanceMetric::ViolationSquaredL2:
      out = trace.violation;
      break;
    case PerformanceMetric::SubproblemFeasibility:
      if (trace.steps.empty() || trace.steps.back().is_round)
        out.push_back(0.0);
      else
        out.push_back(farkas_value(trace.steps.back().qp));
      break;
  }
  return out;
}

int worker_count(int requested) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  int n = requested > 0 ? requested : hw;
  if (const char* env = std::getenv("SCPVERIFY_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

SampleMaxReport sample_maximum(const ParametricProblem& problem, const AlgorithmSchedule& schedule,
                               const ParameterSet& pset, PerformanceMetric metric, int num_samples,
                               std::uint64_t seed, const SampleOptions& opt) {
  if (num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Vec> xs;
  for (int s = 0; s < num_samples; ++s) xs.push_back(pset.sample(rng));

  std::vector<std::vector<double>> values(num_samples);
  std::vector<std::string> errors(num_samples);
  RunOptions ro = opt.run;
  if (metric == PerformanceMetric::SubproblemFeasibility) ro.stop_on_infeasible = false;
  auto work = [&](int s) {
    try {
      const IterateTrace tr = run_schedule(problem, schedule, xs[s], ro);
      double fstar = 0.0;
      if (metric == PerformanceMetric::Suboptimality) {
        const OracleResult o = reference_oracle(problem, xs[s], opt.oracle);
        if (!o.feasible) throw std::runtime_error("no feasible point for the oracle");
        fstar = o.value;
      }
      values[s] = trace_metric(problem, tr, metric, fstar);
    } catch (const std::exception& e) {
      errors[s] = e.what();
    }
  };
  const int workers = std::min(worker_count(opt.threads), num_samples);
  if (workers <= 1) {
    for (int s = 0; s < num_samples; ++s) work(s);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int s; (s = next.fetch_add(1)) < num_samples;) work(s);
      });
    for (auto& t : pool) t.join();
  }

  SampleMaxReport rep;
  rep.num_samples = num_samples;
  rep.seed = seed;
  rep.metric = metric;
  if (metric == PerformanceMetric::SubproblemFeasibility)
    rep.first_iteration = schedule.K();
  else if (!initial_point(schedule.init))
    rep.first_iteration = 1;
  for (int s = 0; s < num_samples; ++s) {
    if (!errors[s].empty()) {
      rep.failed_samples.push_back(s);
      rep.failures.push_back(errors[s]);
      continue;
    }
    const auto& v = values[s];
    if (rep.max_per_iter.size() < v.size()) {
      rep.max_per_iter.resize(v.size(), -std::numeric_limits<double>::infinity());
      rep.argmax.resize(v.size());
    }
    for (size_t k = 0; k < v.size(); ++k)
      if (v[k] > rep.max_per_iter[k]) {
        rep.max_per_iter[k] = v[k];
        rep.argmax[k] = xs[s];
      }
  }
  return rep;
}

std::string trace_csv(const IterateTrace& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,objective,violation\n";
  const int first = trace.has_initial ? 0 : 1;
  for (size_t k = 0; k < trace.iterates.size(); ++k)
    os << first + static_cast<int>(k) << ',' << trace.objective[k] << ',' << trace.violation[k]
       << '\n';
  return os.str();
}

std::string report_csv(const SampleMaxReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,value\n";
  for (size_t k = 0; k < report.max_per_iter.size(); ++k)
    os << report.first_iteration + static_cast<int>(k) << ',' << report.max_per_iter[k] << '\n';
  return os.str();
}

}  // namespace scpv
