#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bopf/engine.hpp"
#include "bopf/workload.hpp"

namespace bopf {

struct Scenario {
  ClusterConfig cluster;
  std::vector<QueueSpec> queues;
  double horizon = 0.0;

  RunSpec to_run(Policy policy, SimMode mode, AllocOptions alloc = {}) const;
};

struct ScenarioBounds {
  int max_lqs = 3;
  int max_tqs = 4;
  size_t max_dims = 3;
};

// Randomized but admission-friendly scenario: demands sized against the
// long-term fair share so most LQs land in a guarantee class, TQ backlogs
// wide enough to absorb their share for the whole horizon.
Scenario random_scenario(std::uint64_t seed, const ScenarioBounds& bounds = {});

// Discretized water-filling reference for drf_fill: repeatedly grants eps of
// dominant share to the active queue(s) with the minimum dominant share.
// Deliberately simple and separate from the production fixed-point solver.
std::map<std::string, ResourceVector> water_filling_oracle(
    const std::vector<QueueDemand>& demands, const ResourceVector& capacity, double eps);

struct PropertyReport {
  int scenarios = 0;
  int hard_bursts = 0;
  int hard_deadline_misses = 0;
  int fairness_windows = 0;
  int fairness_violations = 0;
  double worst_margin = 0.0;
  int pareto_epochs = 0;
  int pareto_violations = 0;
  int drf_instances = 0;
  int drf_mismatches = 0;
  double worst_drf_error = 0.0;
  int sandwich_bursts = 0;
  int sandwich_violations = 0;
  std::vector<std::string> failures;

  bool ok() const;
  std::string to_json() const;
  std::string summary() const;
};

// Runs the randomized assertions: (a) hard bursts meet deadlines in fluid
// mode, (b) fairness margins stay nonnegative on constant-membership windows,
// (c) no unsatisfied queue is left with usable residual capacity after the
// spare pass, (d) drf_fill matches the water-filling oracle, (e) task-mode
// hard-burst completions sit between the fluid completion and fluid plus one
// task length per stage of chain.
PropertyReport property_suite(int n_scenarios, std::uint64_t seed,
                              const ScenarioBounds& bounds = {}, AllocOptions alloc = {});

// Outcome of one report choice, compared lexicographically:
// class rank, then whether every burst's true work met its true deadline,
// then mean completion (smaller is better).
struct Outcome {
  int class_rank = 0;  // rejected/invalid 0, elastic 1, soft 2, hard 3
  bool satisfied = false;
  double mean_completion = 0.0;
};

bool outcome_improves(const Outcome& candidate, const Outcome& truthful);
bool outcome_geq(const Outcome& a, const Outcome& b);

struct StrategyproofReport {
  int scenarios = 0;
  int misreports = 0;
  int strict_improvements = 0;
  int dominance_checks = 0;
  int dominance_violations = 0;
  std::vector<std::string> failures;
  std::vector<std::string> notes;  // reported (not asserted) observations

  bool ok() const;
  std::string to_json() const;
  std::string summary() const;
};

// Misreport sweep: demand scaled by beta, deadline scaled by the same grid,
// plus non-proportional perturbations checked against their proportional
// dominators z = p*d, p = min_k v_k/d_k. The underlying work is always the
// true one; only the declaration changes.
StrategyproofReport strategyproofness_grid(int n_scenarios, std::uint64_t seed,
                                           const std::vector<double>& grid = {0.25, 0.5, 0.8, 1.0,
                                                                              1.25, 2.0, 4.0});

}  // namespace bopf
