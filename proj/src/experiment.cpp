#include "bopf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bopf/errors.hpp"
#include "bopf/metrics.hpp"

namespace bopf {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

template <typename T>
T get_field(const ordered_json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) config_fail(path + "." + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const std::exception& ex) {
    config_fail(path + "." + key, ex.what());
  }
}

template <typename T>
T get_or(const ordered_json& j, const std::string& key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("config parse error: ") + ex.what());
  }
  ExperimentConfig c;

  const auto& cl = j.contains("cluster") ? j.at("cluster") : ordered_json::object();
  if (cl.empty()) config_fail("cluster", "missing");
  c.cluster.capacity = ResourceVector(get_field<std::vector<double>>(cl, "cluster", "capacity"));
  c.cluster.resource_names = get_or(cl, "resource_names", std::vector<std::string>{});
  c.cluster.n_min = get_or(cl, "n_min", 1);
  c.cluster.tick_seconds = get_or(cl, "tick_seconds", 1.0);

  c.policies = get_field<std::vector<std::string>>(j, "", "policies");
  if (c.policies.empty()) config_fail("policies", "at least one policy required");
  for (const auto& p : c.policies) parse_policy(p);
  std::string mode = get_or<std::string>(j, "mode", "task");
  if (mode != "task" && mode != "fluid") config_fail("mode", "expected 'task' or 'fluid'");
  c.mode = mode == "task" ? SimMode::Task : SimMode::Fluid;
  if (!j.contains("seed")) config_fail("seed", "missing (determinism requires a seed)");
  c.seed = j.at("seed").get<std::uint64_t>();
  c.seed_set = true;
  c.horizon = get_or(j, "horizon", 0.0);
  c.output_dir = get_or<std::string>(j, "output_dir", "out");

  const auto& w = j.contains("workload") ? j.at("workload") : ordered_json::object();
  if (w.contains("lqs")) {
    int idx = 0;
    for (const auto& l : w.at("lqs")) {
      std::string path = "workload.lqs[" + std::to_string(idx++) + "]";
      LqEntry e;
      e.params.id = get_or<std::string>(l, "id", "lq" + std::to_string(idx - 1));
      e.params.first_arrival = get_or(l, "first_arrival", 0.0);
      e.params.period = get_field<double>(l, path, "period");
      e.params.deadline_window = get_field<double>(l, path, "deadline_window");
      e.params.n_bursts = get_field<int>(l, path, "n_bursts");
      e.params.burst_demand = ResourceVector(get_field<std::vector<double>>(l, path, "demand"));
      e.params.jobs_per_burst = get_or(l, "jobs_per_burst", 1);
      e.params.tasks_per_job = get_or(l, "tasks_per_job", 10);
      e.params.task_duration = get_or(l, "task_duration", 10.0);
      e.params.alpha = get_or(l, "alpha", 0.95);
      e.params.trailing_marker = get_or(l, "trailing_marker", true);
      if (l.contains("stochastic")) {
        const auto& st = l.at("stochastic");
        e.stochastic.enabled = true;
        e.stochastic.sigma_pct = get_field<double>(st, path + ".stochastic", "sigma_pct");
        e.stochastic.correlation = get_or<std::string>(st, "correlation", "independent");
        e.stochastic.declared = get_or<std::string>(st, "declared", "mean");
        e.stochastic.seed_offset = get_or<std::uint64_t>(st, "seed_offset", 0);
      }
      c.lqs.push_back(std::move(e));
    }
  }
  if (w.contains("tqs")) {
    int idx = 0;
    for (const auto& t : w.at("tqs")) {
      std::string path = "workload.tqs[" + std::to_string(idx++) + "]";
      TqGroup g;
      g.id_prefix = get_or<std::string>(t, "id_prefix", "tq");
      g.count = get_or(t, "count", 1);
      g.jobs_per_queue = get_or(t, "jobs_per_queue", 20);
      g.shape = parse_tq_shape(get_or<std::string>(t, "shape", "bb"));
      g.task_demand_scale = get_or(t, "task_demand_scale", 2.0);
      c.tq_groups.push_back(std::move(g));
    }
  }
  c.trace_files = get_or(w, "traces", std::vector<std::string>{});
  c.estimation_error_std_pct = get_or(w, "estimation_error_std_pct", 0.0);
  c.cluster.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json() const {
  ordered_json j;
  ordered_json cl;
  cl["capacity"] = cluster.capacity.values();
  cl["resource_names"] = cluster.resource_names;
  cl["n_min"] = cluster.n_min;
  cl["tick_seconds"] = cluster.tick_seconds;
  j["cluster"] = std::move(cl);
  j["policies"] = policies;
  j["mode"] = mode == SimMode::Task ? "task" : "fluid";
  j["seed"] = seed;
  j["horizon"] = horizon;
  j["output_dir"] = output_dir;
  ordered_json w;
  ordered_json lq_arr = ordered_json::array();
  for (const auto& e : lqs) {
    ordered_json l;
    l["id"] = e.params.id;
    l["first_arrival"] = e.params.first_arrival;
    l["period"] = e.params.period;
    l["deadline_window"] = e.params.deadline_window;
    l["n_bursts"] = e.params.n_bursts;
    l["demand"] = e.params.burst_demand.values();
    l["jobs_per_burst"] = e.params.jobs_per_burst;
    l["tasks_per_job"] = e.params.tasks_per_job;
    l["task_duration"] = e.params.task_duration;
    l["alpha"] = e.params.alpha;
    l["trailing_marker"] = e.params.trailing_marker;
    if (e.stochastic.enabled) {
      ordered_json st;
      st["sigma_pct"] = e.stochastic.sigma_pct;
      st["correlation"] = e.stochastic.correlation;
      st["declared"] = e.stochastic.declared;
      st["seed_offset"] = e.stochastic.seed_offset;
      l["stochastic"] = std::move(st);
    }
    lq_arr.push_back(std::move(l));
  }
  w["lqs"] = std::move(lq_arr);
  ordered_json tq_arr = ordered_json::array();
  for (const auto& g : tq_groups) {
    ordered_json t;
    t["id_prefix"] = g.id_prefix;
    t["count"] = g.count;
    t["jobs_per_queue"] = g.jobs_per_queue;
    t["shape"] = g.shape == TqShape::BB ? "bb" : (g.shape == TqShape::TpcDs ? "tpcds" : "tpch");
    t["task_demand_scale"] = g.task_demand_scale;
    tq_arr.push_back(std::move(t));
  }
  w["tqs"] = std::move(tq_arr);
  w["traces"] = trace_files;
  w["estimation_error_std_pct"] = estimation_error_std_pct;
  j["workload"] = std::move(w);
  return j.dump(2);
}

std::vector<QueueSpec> ExperimentConfig::build_workload() const {
  std::vector<QueueSpec> queues;
  std::uint64_t lq_seed = seed;
  for (const auto& e : lqs) {
    QueueSpec q;
    if (e.stochastic.enabled) {
      StochasticLqParams sp;
      sp.base = e.params;
      DemandDistribution dist;
      dist.correlation = e.stochastic.correlation == "perfect"
                             ? DemandDistribution::Correlation::PerfectlyCorrelated
                             : DemandDistribution::Correlation::Independent;
      for (size_t k = 0; k < e.params.burst_demand.size(); ++k) {
        DemandDistribution::Marginal m;
        m.mu = e.params.burst_demand[k];
        m.sigma = e.stochastic.sigma_pct / 100.0 * m.mu;
        dist.marginals.push_back(m);
      }
      sp.distribution = dist;
      sp.declared = e.stochastic.declared;
      sp.seed = seed + e.stochastic.seed_offset + 0x51ed2700 + lq_seed;
      q = synth_lq_stochastic(sp);
    } else {
      q = synth_lq(e.params);
    }
    if (estimation_error_std_pct > 0.0) {
      q = inject_estimation_error(q, estimation_error_std_pct, seed ^ (lq_seed * 2654435761ull));
    }
    queues.push_back(std::move(q));
    lq_seed++;
  }
  int group_index = 0;
  for (const auto& g : tq_groups) {
    for (int i = 0; i < g.count; ++i) {
      TqParams tp;
      tp.id = g.id_prefix + std::to_string(i);
      tp.n_jobs = g.jobs_per_queue;
      tp.shape = g.shape;
      tp.dims = cluster.dims();
      tp.task_demand_scale = g.task_demand_scale;
      tp.seed = seed + 7700 + 131 * group_index + i;
      queues.push_back(synth_tq(tp));
    }
    group_index++;
  }
  for (const auto& path : trace_files) {
    for (auto& q : trace_to_tqs(load_trace_file(path, cluster.dims()))) {
      queues.push_back(std::move(q));
    }
  }
  return queues;
}

RunSpec ExperimentConfig::build_run(Policy policy) const {
  RunSpec spec;
  spec.cluster = cluster;
  spec.queues = build_workload();
  spec.policy = policy;
  spec.mode = mode;
  spec.horizon = horizon;
  return spec;
}

namespace {

fs::path output_root(const ExperimentConfig& config) {
  const char* env = std::getenv("BOPF_OUTPUT_ROOT");
  if (env != nullptr && *env != '\0') return fs::path(env);
  return fs::path(config.output_dir);
}

struct PolicyRun {
  std::string policy;
  EventLog log;
  RunSummary summary;
};

void write_artifacts(const fs::path& dir, const ExperimentConfig& config, const PolicyRun& run) {
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "events.jsonl");
    run.log.write_jsonl(f);
  }
  {
    std::ofstream f(dir / "alloc.csv");
    run.log.write_alloc_csv(f);
  }
  {
    std::ofstream f(dir / "summary.json");
    ordered_json j;
    j["config"] = ordered_json::parse(config.to_json());
    j["policy"] = run.policy;
    j["summary"] = ordered_json::parse(run.summary.to_json());
    f << j.dump(2) << "\n";
  }
}

}  // namespace

int run_experiment(const ExperimentConfig& config, std::ostream& status) {
  if (!config.seed_set) throw ConfigError("config field 'seed': missing");
  fs::path root = output_root(config);

  std::vector<PolicyRun> runs(config.policies.size());
  std::mutex status_mu;
  unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                     config.policies.size()));
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mu;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (size_t i = next.fetch_add(1); i < config.policies.size(); i = next.fetch_add(1)) {
        try {
          PolicyRun r;
          r.policy = config.policies[i];
          r.log = run(config.build_run(parse_policy(r.policy)));
          r.summary = summarize(r.log);
          runs[i] = std::move(r);
          std::lock_guard<std::mutex> lk(status_mu);
          status << "policy=" << config.policies[i] << " seed=" << config.seed
                 << " makespan=" << runs[i].summary.makespan
                 << " lq_avg=" << avg_completion_lq(runs[i].log)
                 << " tq_avg=" << avg_completion_tq(runs[i].log)
                 << (runs[i].summary.truncated ? " truncated" : "") << "\n";
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  for (const auto& r : runs) write_artifacts(root / r.policy, config, r);

  if (runs.size() > 1) {
    const EventLog* drf_log = nullptr;
    for (const auto& r : runs) {
      if (r.policy == "drf") drf_log = &r.log;
    }
    std::ofstream f(root / "comparison.csv");
    f << "policy,lq_avg_completion,tq_avg_completion,foi_lq_vs_drf,foi_tq_vs_drf\n";
    for (const auto& r : runs) {
      double lq = avg_completion_lq(r.log);
      double tq = avg_completion_tq(r.log);
      f << r.policy << "," << lq << "," << tq << ",";
      if (drf_log != nullptr) {
        f << (lq > 0.0 ? avg_completion_lq(*drf_log) / lq : 0.0) << ","
          << (tq > 0.0 ? avg_completion_tq(*drf_log) / tq : 0.0);
      } else {
        f << ",";
      }
      f << "\n";
    }
  }
  return 0;
}

int replay_run(const std::string& run_dir, std::ostream& status) {
  fs::path dir(run_dir);
  std::ifstream ev(dir / "events.jsonl");
  if (!ev) throw ConfigError("replay: cannot open " + (dir / "events.jsonl").string());
  EventLog log = EventLog::read_jsonl(ev);
  RunSummary recomputed = summarize(log);

  std::ifstream sf(dir / "summary.json");
  if (!sf) throw ConfigError("replay: cannot open " + (dir / "summary.json").string());
  ordered_json stored = ordered_json::parse(sf);

  ordered_json fresh = ordered_json::parse(recomputed.to_json());
  {
    std::ofstream out(dir / "summary_replay.json");
    out << fresh.dump(2) << "\n";
  }
  bool same = stored.contains("summary") && stored.at("summary") == fresh;
  status << "replay " << run_dir << ": " << (same ? "identical" : "MISMATCH") << "\n";
  return same ? 0 : 1;
}

BenchResult bench_admission(int n_lq, int n_tq, int cycles, int reps) {
  BenchResult res;
  res.n_lq = n_lq;
  res.n_tq = n_tq;
  res.cycles = cycles;

  ClusterConfig cluster;
  cluster.capacity = ResourceVector{100.0, 100.0};
  cluster.resource_names = {"r0", "r1"};
  cluster.n_min = 2;

  // Zero-rate guarantees run the full safety/fairness/resource scan over
  // every cycle but commit no timeline segments, keeping per-queue work
  // uniform across sizes.
  QueueSpec lq_template;
  lq_template.kind = QueueKind::LQ;
  lq_template.sla_fraction = 0.95;
  for (int n = 0; n < std::max(cycles, 1); ++n) {
    BurstSpec b;
    b.arrival_time = 100.0 * n;
    b.deadline_window = 30.0;
    b.demand = ResourceVector(2);
    lq_template.bursts.push_back(std::move(b));
  }
  QueueSpec tq_template;
  tq_template.kind = QueueKind::TQ;

  // Small populations finish in microseconds; loop them inside one timed
  // region so scheduler noise averages out at every size.
  int iterations = std::max(1, 20000 / std::max(n_lq + n_tq, 1));
  std::vector<double> samples;
  for (int rep = 0; rep < std::max(reps, 1); ++rep) {
    double total = 0.0;
    for (int it = 0; it < iterations; ++it) {
      AdmissionState state(cluster);
      state.reserve(n_lq + n_tq);
      auto start = std::chrono::steady_clock::now();
      for (int i = 0; i < n_lq; ++i) {
        lq_template.id = "lq" + std::to_string(i);
        state.admit_lq(lq_template);
      }
      for (int i = 0; i < n_tq; ++i) {
        tq_template.id = "tq" + std::to_string(i);
        state.admit_tq(tq_template);
      }
      auto stop = std::chrono::steady_clock::now();
      total += std::chrono::duration<double, std::milli>(stop - start).count();
      if (rep + 1 == std::max(reps, 1) && it + 1 == iterations) {
        res.admitted_hard = static_cast<int>(state.hard().size());
        res.admitted_elastic = static_cast<int>(state.elastic().size());
        res.rejected = static_cast<int>(state.rejected().size());
      }
    }
    samples.push_back(total / iterations);
  }
  std::sort(samples.begin(), samples.end());
  res.millis = samples.empty() ? 0.0 : samples[samples.size() / 2];
  return res;
}

}  // namespace bopf
