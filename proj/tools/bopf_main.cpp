#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bopf/experiment.hpp"
#include "bopf/proptest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multi-resource cluster scheduling simulator and policy library"};
  app.require_subcommand(1);

  std::string config_path;
  std::string policy_override;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment config");
  run_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
  run_cmd->add_option("--policy", policy_override, "Run only this policy");

  std::string sweep_config;
  std::vector<std::string> sweep_policies;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a config across several policies");
  sweep_cmd->add_option("config", sweep_config, "Experiment config (JSON)")->required();
  sweep_cmd->add_option("--policies", sweep_policies, "Policies to sweep")->delimiter(',');

  int bench_lqs = 10000, bench_tqs = 10000, bench_cycles = 500, bench_reps = 3;
  auto* bench_cmd = app.add_subcommand("bench-admission", "Time the admission control path");
  bench_cmd->add_option("--lqs", bench_lqs, "Number of LQ admissions");
  bench_cmd->add_option("--tqs", bench_tqs, "Number of TQ admissions");
  bench_cmd->add_option("--cycles", bench_cycles, "Bursts per LQ");
  bench_cmd->add_option("--reps", bench_reps, "Timed repetitions (best kept)");

  int pt_scenarios = 100;
  int sp_scenarios = 20;
  std::uint64_t pt_seed = 42;
  std::string pt_out;
  auto* pt_cmd = app.add_subcommand("proptest", "Run the property and strategyproofness suites");
  pt_cmd->add_option("--scenarios", pt_scenarios, "Randomized scenarios");
  pt_cmd->add_option("--strategy-scenarios", sp_scenarios, "Misreport scenarios");
  pt_cmd->add_option("--seed", pt_seed, "Base seed");
  pt_cmd->add_option("--out", pt_out, "Write the JSON report here");

  std::string replay_dir;
  auto* replay_cmd = app.add_subcommand("replay", "Recompute a run's summary from its event log");
  replay_cmd->add_option("run_dir", replay_dir, "Directory with events.jsonl + summary.json")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd || *sweep_cmd) {
      auto config = bopf::ExperimentConfig::from_json_file(*run_cmd ? config_path : sweep_config);
      if (*run_cmd && !policy_override.empty()) config.policies = {policy_override};
      if (*sweep_cmd && !sweep_policies.empty()) config.policies = sweep_policies;
      return bopf::run_experiment(config, std::cout);
    }
    if (*bench_cmd) {
      auto res = bopf::bench_admission(bench_lqs, bench_tqs, bench_cycles, bench_reps);
      std::cout << "admissions lq=" << res.n_lq << " tq=" << res.n_tq
                << " cycles=" << res.cycles << " time_ms=" << res.millis
                << " (hard=" << res.admitted_hard << " elastic=" << res.admitted_elastic
                << " rejected=" << res.rejected << ")\n";
      return 0;
    }
    if (*pt_cmd) {
      auto props = bopf::property_suite(pt_scenarios, pt_seed);
      auto strat = bopf::strategyproofness_grid(sp_scenarios, pt_seed);
      std::cout << props.summary() << "\n" << strat.summary();
      if (!pt_out.empty()) {
        std::ofstream out(pt_out);
        out << "{\"properties\":" << props.to_json() << ",\n\"strategyproofness\":"
            << strat.to_json() << "}\n";
      }
      return props.ok() && strat.ok() ? 0 : 1;
    }
    if (*replay_cmd) {
      return bopf::replay_run(replay_dir, std::cout);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
