#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bopf/resource_vector.hpp"

namespace bopf {

struct ClusterConfig {
  ResourceVector capacity;                 // rate units, strictly positive
  std::vector<std::string> resource_names; // K labels
  int n_min = 1;                           // minimum expected queue count in fair-share denominators
  double tick_seconds = 1.0;

  size_t dims() const { return capacity.size(); }
  void validate() const;
};

// A stage is a set of identical tasks; every task holds task_demand (rate
// units) for task_duration seconds.
struct StageSpec {
  int task_count = 0;
  ResourceVector task_demand;
  double task_duration = 0.0;

  // Cumulative work of the stage in resource*seconds.
  ResourceVector total_demand() const;
  // Rate the stage consumes with all tasks running concurrently.
  ResourceVector parallel_rate() const;
};

struct JobSpec {
  std::string id;
  std::vector<StageSpec> stages;
  // DAG edges (from, to) over stage indices; a stage is runnable only after
  // all predecessors finish. Must be acyclic with every stage reachable.
  std::vector<std::pair<int, int>> stage_dependencies;

  ResourceVector total_demand(size_t dims) const;
  ResourceVector parallel_rate(size_t dims) const;
  // Length of the longest dependency chain, in stages.
  int critical_path_length() const;
  void validate(size_t dims) const;
};

// One arrival of a latency-sensitive queue: demand d (resource*seconds) due
// within [arrival_time, arrival_time + deadline_window].
struct BurstSpec {
  double arrival_time = 0.0;
  double deadline_window = 0.0;
  ResourceVector demand;
  std::vector<JobSpec> jobs;

  double deadline() const { return arrival_time + deadline_window; }
};

enum class QueueKind { LQ, TQ };

// Per-resource marginal demand model used by the quantile-provisioning
// strategy for stochastic bursts.
struct DemandDistribution {
  struct Marginal {
    double mu = 0.0;
    double sigma = 0.0;              // Normal(mu, sigma) truncated at 0
    std::vector<double> samples;     // empirical alternative; used when nonempty
  };
  enum class Correlation { Independent, PerfectlyCorrelated };

  std::vector<Marginal> marginals;
  Correlation correlation = Correlation::Independent;

  void validate() const;
};

struct QueueSpec {
  std::string id;
  QueueKind kind = QueueKind::TQ;

  // LQ only.
  std::vector<BurstSpec> bursts;
  double sla_fraction = 1.0;  // alpha in (0, 1]
  std::optional<DemandDistribution> demand_distribution;

  // TQ only: backlog, all arriving at time 0.
  std::vector<JobSpec> jobs;

  // Set when declared burst demand is an estimate (error injection,
  // stochastic arrivals); suspends the jobs-sum-equals-demand check.
  bool declared_demand_is_estimate = false;

  bool is_lq() const { return kind == QueueKind::LQ; }
  // Inter-arrival interval for burst n used by the admission conditions:
  // T(n+1) - T(n), or the deadline window for the last burst.
  double burst_interval(size_t n) const;
  double last_arrival() const;
  void validate(size_t dims) const;
};

}  // namespace bopf
