#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bopf/spec_types.hpp"

namespace bopf {

// --- Trace files -----------------------------------------------------------
// JSON-lines, one job per line:
//   {"job_id":"j1","queue_id":"tq0","stages":[{"tasks":4,"demand":[2,1],
//    "duration":10}],"deps":[[0,1]]}

std::vector<std::pair<std::string, JobSpec>> load_trace(std::istream& is, size_t dims);
std::vector<std::pair<std::string, JobSpec>> load_trace_file(const std::string& path, size_t dims);
void write_trace(std::ostream& os, const std::vector<std::pair<std::string, JobSpec>>& entries);

// Groups trace jobs into TQ queue specs (jobs keep file order per queue).
std::vector<QueueSpec> trace_to_tqs(const std::vector<std::pair<std::string, JobSpec>>& entries);

// --- Synthetic workloads ----------------------------------------------------

struct LqParams {
  std::string id = "lq0";
  double first_arrival = 0.0;
  double period = 300.0;
  double deadline_window = 30.0;
  int n_bursts = 5;
  ResourceVector burst_demand;  // cumulative resource*seconds per burst
  int jobs_per_burst = 1;
  int tasks_per_job = 10;
  double task_duration = 10.0;
  double alpha = 0.95;
  // Appends a zero-demand terminal burst one period after the last real one,
  // so every real burst keeps the inter-arrival period as its admission
  // interval instead of the conservative deadline-window fallback.
  bool trailing_marker = false;
};

// Periodic bursts whose jobs' task demand*duration sums match burst_demand.
QueueSpec synth_lq(const LqParams& p);

enum class TqShape { BB, TpcDs, TpcH };
TqShape parse_tq_shape(const std::string& name);

struct TqParams {
  std::string id = "tq0";
  int n_jobs = 20;
  TqShape shape = TqShape::BB;
  size_t dims = 2;
  // Upper bound on a task's per-resource demand; drawn uniformly below it.
  double task_demand_scale = 2.0;
  // Multiplies every drawn task duration (desk-scale runs shrink the long
  // tail without changing the shape).
  double duration_scale = 1.0;
  std::uint64_t seed = 1;
};

// Batch backlog with stage/duration shapes echoing the public benchmark
// families (BB: two stages with a heavy short-task mass; the TPC-like shapes
// run longer chains).
QueueSpec synth_tq(const TqParams& p);

// --- Uncertainty ------------------------------------------------------------

// Scales each task type's demand and duration by (1 + e/100), e drawn from
// Normal(0, std_pct), clamped below at 1% of the original. The declared burst
// demand stays at the original estimate.
QueueSpec inject_estimation_error(const QueueSpec& spec, double std_pct, std::uint64_t seed);

// Quantile of one marginal (truncated normal or empirical), p in (0,1).
double marginal_quantile(const DemandDistribution::Marginal& m, double p);

// Requested demand per resource for an SLA fraction alpha: the alpha^(1/K)
// quantile per marginal when resources are independent, the alpha quantile
// when they are perfectly correlated.
ResourceVector alpha_strategy_demand(const DemandDistribution& dist, double alpha, size_t dims);

// One random demand vector (componentwise independent draws, or one shared
// uniform pushed through every marginal's quantile when perfectly correlated).
ResourceVector sample_demand(const DemandDistribution& dist, std::uint64_t& rng_state);

struct StochasticLqParams {
  LqParams base;
  DemandDistribution distribution;
  // "mean": declare the distribution mean (vanilla). "alpha": declare the
  // quantile-provisioned demand for base.alpha.
  std::string declared = "mean";
  // Burst realization: one draw for the whole burst, or one draw per job
  // (task-level variation; the burst total then concentrates around the
  // mean while the declared model keeps the per-component marginals).
  bool per_job_variation = false;
  std::uint64_t seed = 1;
};

// Bursts whose actual job workload is sampled per arrival while the declared
// demand is fixed by the chosen strategy.
QueueSpec synth_lq_stochastic(const StochasticLqParams& p);

// Standard normal quantile (numeric inverse CDF, |err| < 1e-12 after polish).
double normal_quantile(double p);
double normal_cdf(double x);

}  // namespace bopf
