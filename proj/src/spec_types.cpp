#include "bopf/spec_types.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "bopf/errors.hpp"

namespace bopf {

void ClusterConfig::validate() const {
  if (capacity.size() == 0) throw ConfigError("cluster capacity must have at least one resource");
  for (size_t k = 0; k < capacity.size(); ++k) {
    if (capacity[k] <= 0.0) {
      throw ConfigError("cluster capacity component " + std::to_string(k) +
                        " must be strictly positive");
    }
  }
  if (!resource_names.empty() && resource_names.size() != capacity.size()) {
    throw ConfigError("resource_names size does not match capacity dimension");
  }
  if (n_min < 1) throw ConfigError("n_min must be >= 1");
  if (tick_seconds <= 0.0) throw ConfigError("tick_seconds must be positive");
}

ResourceVector StageSpec::total_demand() const {
  return task_demand * (static_cast<double>(task_count) * task_duration);
}

ResourceVector StageSpec::parallel_rate() const {
  return task_demand * static_cast<double>(task_count);
}

ResourceVector JobSpec::total_demand(size_t dims) const {
  ResourceVector d(dims);
  for (const auto& s : stages) d += s.total_demand();
  return d;
}

ResourceVector JobSpec::parallel_rate(size_t dims) const {
  ResourceVector r(dims);
  for (const auto& s : stages) r += s.parallel_rate();
  return r;
}

namespace {

// Topological order of job stages; throws SpecError naming a cycle member if
// the dependency graph is cyclic.
std::vector<int> topo_order(const JobSpec& job) {
  const int n = static_cast<int>(job.stages.size());
  std::vector<std::vector<int>> out(n);
  std::vector<int> indeg(n, 0);
  for (auto [from, to] : job.stage_dependencies) {
    if (from < 0 || from >= n || to < 0 || to >= n) {
      throw SpecError("job " + job.id + ": dependency references stage out of range");
    }
    out[from].push_back(to);
    indeg[to]++;
  }
  std::queue<int> ready;
  for (int i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push(i);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    int s = ready.front();
    ready.pop();
    order.push_back(s);
    for (int t : out[s]) {
      if (--indeg[t] == 0) ready.push(t);
    }
  }
  if (static_cast<int>(order.size()) != n) {
    std::string cyc;
    for (int i = 0; i < n; ++i) {
      if (indeg[i] > 0) cyc += (cyc.empty() ? "" : ",") + std::to_string(i);
    }
    throw SpecError("job " + job.id + ": stage dependency cycle through stages {" + cyc + "}");
  }
  return order;
}

}  // namespace

int JobSpec::critical_path_length() const {
  if (stages.empty()) return 0;
  auto order = topo_order(*this);
  const int n = static_cast<int>(stages.size());
  std::vector<int> depth(n, 1);
  std::vector<std::vector<int>> out(n);
  for (auto [from, to] : stage_dependencies) out[from].push_back(to);
  int best = 1;
  for (int s : order) {
    for (int t : out[s]) depth[t] = std::max(depth[t], depth[s] + 1);
    best = std::max(best, depth[s]);
  }
  for (int d : depth) best = std::max(best, d);
  return best;
}

void JobSpec::validate(size_t dims) const {
  if (stages.empty()) throw SpecError("job " + id + ": must have at least one stage");
  for (size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    if (s.task_count <= 0) {
      throw SpecError("job " + id + " stage " + std::to_string(i) + ": task_count must be positive");
    }
    if (s.task_duration <= 0.0) {
      throw SpecError("job " + id + " stage " + std::to_string(i) + ": task_duration must be positive");
    }
    if (s.task_demand.size() != dims) {
      throw SpecError("job " + id + " stage " + std::to_string(i) + ": task demand has dimension " +
                      std::to_string(s.task_demand.size()) + ", expected " + std::to_string(dims));
    }
    for (size_t k = 0; k < dims; ++k) {
      if (s.task_demand[k] < 0.0) {
        throw SpecError("job " + id + " stage " + std::to_string(i) + ": negative task demand");
      }
    }
  }
  topo_order(*this);  // acyclic check
}

void DemandDistribution::validate() const {
  if (marginals.empty()) throw SpecError("demand distribution needs at least one marginal");
  for (const auto& m : marginals) {
    if (m.samples.empty()) {
      if (m.mu <= 0.0) throw SpecError("demand distribution: mu must be positive");
      if (m.sigma < 0.0) throw SpecError("demand distribution: sigma must be nonnegative");
    }
  }
}

double QueueSpec::burst_interval(size_t n) const {
  if (n >= bursts.size()) throw SpecError("queue " + id + ": no burst " + std::to_string(n));
  double interval = (n + 1 < bursts.size())
                        ? bursts[n + 1].arrival_time - bursts[n].arrival_time
                        : bursts[n].deadline_window;
  if (interval <= 0.0) {
    throw SpecError("queue " + id + ": nonpositive interval for burst " + std::to_string(n));
  }
  return interval;
}

double QueueSpec::last_arrival() const {
  if (is_lq()) return bursts.empty() ? 0.0 : bursts.back().arrival_time;
  return 0.0;
}

void QueueSpec::validate(size_t dims) const {
  if (id.empty()) throw SpecError("queue id must be nonempty");
  if (is_lq()) {
    if (bursts.empty()) throw SpecError("queue " + id + ": LQ needs at least one burst");
    if (sla_fraction <= 0.0 || sla_fraction > 1.0) {
      throw SpecError("queue " + id + ": sla_fraction must be in (0,1]");
    }
    for (size_t n = 0; n < bursts.size(); ++n) {
      const auto& b = bursts[n];
      if (b.deadline_window <= 0.0) {
        throw SpecError("queue " + id + " burst " + std::to_string(n) +
                        ": deadline window must be positive");
      }
      if (b.demand.size() != dims) {
        throw SpecError("queue " + id + " burst " + std::to_string(n) + ": demand dimension mismatch");
      }
      for (size_t k = 0; k < dims; ++k) {
        if (b.demand[k] < 0.0) {
          throw SpecError("queue " + id + " burst " + std::to_string(n) + ": negative demand");
        }
      }
      if (n + 1 < bursts.size()) {
        if (bursts[n + 1].arrival_time <= b.arrival_time) {
          throw SpecError("queue " + id + ": bursts must be strictly ordered by arrival time");
        }
        if (b.deadline() > bursts[n + 1].arrival_time + kCompareSlack) {
          throw SpecError("queue " + id + " burst " + std::to_string(n) +
                          ": deadline extends past the next arrival");
        }
      }
      ResourceVector realized(dims);
      for (const auto& j : b.jobs) {
        j.validate(dims);
        realized += j.total_demand(dims);
      }
      if (!b.jobs.empty() && !declared_demand_is_estimate) {
        for (size_t k = 0; k < dims; ++k) {
          double scale = std::max(b.demand[k], 1.0);
          if (std::abs(realized[k] - b.demand[k]) > 1e-6 * scale) {
            throw SpecError("queue " + id + " burst " + std::to_string(n) +
                            ": job demand sum " + realized.to_string() +
                            " does not match declared " + b.demand.to_string());
          }
        }
      }
    }
    if (demand_distribution) demand_distribution->validate();
  } else {
    if (jobs.empty()) throw SpecError("queue " + id + ": TQ needs at least one job");
    std::set<std::string> seen;
    for (const auto& j : jobs) {
      j.validate(dims);
      if (!seen.insert(j.id).second) {
        throw SpecError("queue " + id + ": duplicate job id " + j.id);
      }
    }
  }
}

}  // namespace bopf
