#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bopf/engine.hpp"
#include "bopf/workload.hpp"

namespace bopf {

// Experiment root: cluster, policies, workload recipe, seed. The full config
// is echoed into every summary.json for provenance; identical config+seed
// produces byte-identical artifacts.
struct ExperimentConfig {
  ClusterConfig cluster;
  std::vector<std::string> policies;
  SimMode mode = SimMode::Task;
  std::uint64_t seed = 0;
  bool seed_set = false;  // a seed is mandatory; determinism is a contract
  double horizon = 0.0;
  std::string output_dir = "out";

  struct StochasticLq {
    bool enabled = false;
    double sigma_pct = 0.0;  // per-resource sigma as % of the declared mean
    std::string correlation = "independent";
    std::string declared = "mean";  // or "alpha"
    std::uint64_t seed_offset = 0;
  };
  struct LqEntry {
    LqParams params;
    StochasticLq stochastic;
  };
  struct TqGroup {
    std::string id_prefix = "tq";
    int count = 1;
    int jobs_per_queue = 20;
    TqShape shape = TqShape::BB;
    double task_demand_scale = 2.0;
  };

  std::vector<LqEntry> lqs;
  std::vector<TqGroup> tq_groups;
  std::vector<std::string> trace_files;
  double estimation_error_std_pct = 0.0;

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json() const;

  std::vector<QueueSpec> build_workload() const;
  RunSpec build_run(Policy policy) const;
};

// Executes every configured policy (bounded worker pool), writing
// events.jsonl, alloc.csv and summary.json under <output_dir>/<policy>/ and a
// comparison.csv beside them when several policies ran. One status line per
// run goes to `status`. Returns 0 on success.
int run_experiment(const ExperimentConfig& config, std::ostream& status);

// Recomputes summary.json from a run directory's events.jsonl and compares it
// with the stored one. Returns 0 iff identical.
int replay_run(const std::string& run_dir, std::ostream& status);

struct BenchResult {
  int n_lq = 0;
  int n_tq = 0;
  int cycles = 0;
  double millis = 0.0;  // best of `reps` timed repetitions
  int admitted_hard = 0;
  int admitted_elastic = 0;
  int rejected = 0;
};

// Times LQAdmit/TQAdmit for n_lq + n_tq queues (each LQ carrying `cycles`
// bursts) on one core.
BenchResult bench_admission(int n_lq, int n_tq, int cycles, int reps = 3);

}  // namespace bopf
