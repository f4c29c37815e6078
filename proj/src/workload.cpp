#include "bopf/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bopf/errors.hpp"

namespace bopf {

using ordered_json = nlohmann::ordered_json;

// --- Trace files -----------------------------------------------------------

std::vector<std::pair<std::string, JobSpec>> load_trace(std::istream& is, size_t dims) {
  std::vector<std::pair<std::string, JobSpec>> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& ex) {
      throw StructuralError("trace line " + std::to_string(lineno) + ": " + ex.what());
    }
    try {
      JobSpec job;
      job.id = j.at("job_id").get<std::string>();
      std::string queue = j.at("queue_id").get<std::string>();
      for (const auto& s : j.at("stages")) {
        StageSpec st;
        st.task_count = s.at("tasks").get<int>();
        std::vector<double> d = s.at("demand").get<std::vector<double>>();
        if (d.size() != dims) {
          throw StructuralError("demand has " + std::to_string(d.size()) +
                                " components, experiment uses " + std::to_string(dims));
        }
        st.task_demand = ResourceVector(std::move(d));
        st.task_duration = s.at("duration").get<double>();
        job.stages.push_back(std::move(st));
      }
      if (j.contains("deps")) {
        for (const auto& e : j.at("deps")) {
          job.stage_dependencies.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        }
      }
      job.validate(dims);
      out.emplace_back(std::move(queue), std::move(job));
    } catch (const std::exception& ex) {
      throw StructuralError("trace line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

std::vector<std::pair<std::string, JobSpec>> load_trace_file(const std::string& path, size_t dims) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open trace file " + path);
  return load_trace(f, dims);
}

void write_trace(std::ostream& os, const std::vector<std::pair<std::string, JobSpec>>& entries) {
  for (const auto& [queue, job] : entries) {
    ordered_json j;
    j["job_id"] = job.id;
    j["queue_id"] = queue;
    ordered_json stages = ordered_json::array();
    for (const auto& s : job.stages) {
      ordered_json st;
      st["tasks"] = s.task_count;
      st["demand"] = s.task_demand.values();
      st["duration"] = s.task_duration;
      stages.push_back(std::move(st));
    }
    j["stages"] = std::move(stages);
    if (!job.stage_dependencies.empty()) {
      ordered_json deps = ordered_json::array();
      for (auto [a, b] : job.stage_dependencies) deps.push_back({a, b});
      j["deps"] = std::move(deps);
    }
    os << j.dump() << "\n";
  }
}

std::vector<QueueSpec> trace_to_tqs(const std::vector<std::pair<std::string, JobSpec>>& entries) {
  std::vector<QueueSpec> out;
  std::map<std::string, size_t> index;
  for (const auto& [queue, job] : entries) {
    auto it = index.find(queue);
    if (it == index.end()) {
      QueueSpec q;
      q.id = queue;
      q.kind = QueueKind::TQ;
      index.emplace(queue, out.size());
      out.push_back(std::move(q));
      it = index.find(queue);
    }
    out[it->second].jobs.push_back(job);
  }
  return out;
}

// --- Synthetic workloads ----------------------------------------------------

QueueSpec synth_lq(const LqParams& p) {
  if (p.n_bursts <= 0) throw SpecError("synth_lq: n_bursts must be positive");
  if (p.jobs_per_burst <= 0 || p.tasks_per_job <= 0 || p.task_duration <= 0.0) {
    throw SpecError("synth_lq: job shape parameters must be positive");
  }
  QueueSpec q;
  q.id = p.id;
  q.kind = QueueKind::LQ;
  q.sla_fraction = p.alpha;
  double per_task = static_cast<double>(p.jobs_per_burst) * p.tasks_per_job * p.task_duration;
  ResourceVector task_demand = p.burst_demand / per_task;
  for (int n = 0; n < p.n_bursts; ++n) {
    BurstSpec b;
    b.arrival_time = p.first_arrival + n * p.period;
    b.deadline_window = p.deadline_window;
    b.demand = p.burst_demand;
    for (int ji = 0; ji < p.jobs_per_burst; ++ji) {
      JobSpec job;
      job.id = "j" + std::to_string(ji);
      StageSpec st;
      st.task_count = p.tasks_per_job;
      st.task_demand = task_demand;
      st.task_duration = p.task_duration;
      job.stages.push_back(std::move(st));
      b.jobs.push_back(std::move(job));
    }
    q.bursts.push_back(std::move(b));
  }
  if (p.trailing_marker) {
    BurstSpec marker;
    marker.arrival_time = p.first_arrival + p.n_bursts * p.period;
    marker.deadline_window = std::min(1.0, p.period / 10.0);
    marker.demand = ResourceVector(p.burst_demand.size());
    JobSpec job;
    job.id = "marker";
    StageSpec st;
    st.task_count = 1;
    st.task_demand = ResourceVector(p.burst_demand.size());
    st.task_duration = 1e-3;
    job.stages.push_back(std::move(st));
    marker.jobs.push_back(std::move(job));
    q.bursts.push_back(std::move(marker));
  }
  return q;
}

TqShape parse_tq_shape(const std::string& name) {
  if (name == "bb") return TqShape::BB;
  if (name == "tpcds") return TqShape::TpcDs;
  if (name == "tpch") return TqShape::TpcH;
  throw ConfigError("unknown workload shape '" + name + "' (expected bb|tpcds|tpch)");
}

namespace {

double draw_duration(TqShape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * u(rng);
  };
  switch (shape) {
    case TqShape::BB:
      // Heavy short-task mass: most of the work arrives as small tasks.
      if (x < 0.70) return uniform(1.0, 5.0);
      if (x < 0.95) return uniform(5.0, 30.0);
      return uniform(30.0, 120.0);
    case TqShape::TpcDs:
      if (x < 0.40) return uniform(2.0, 10.0);
      if (x < 0.80) return uniform(10.0, 60.0);
      return uniform(60.0, 180.0);
    case TqShape::TpcH:
      if (x < 0.50) return uniform(2.0, 10.0);
      if (x < 0.85) return uniform(10.0, 45.0);
      return uniform(45.0, 150.0);
  }
  return 1.0;
}

}  // namespace

QueueSpec synth_tq(const TqParams& p) {
  if (p.n_jobs <= 0) throw SpecError("synth_tq: n_jobs must be positive");
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  QueueSpec q;
  q.id = p.id;
  q.kind = QueueKind::TQ;
  for (int ji = 0; ji < p.n_jobs; ++ji) {
    JobSpec job;
    job.id = "j" + std::to_string(ji);
    int n_stages;
    switch (p.shape) {
      case TqShape::BB: n_stages = 2; break;
      case TqShape::TpcDs: n_stages = 3 + static_cast<int>(u(rng) * 4); break;
      case TqShape::TpcH: n_stages = 2 + static_cast<int>(u(rng) * 4); break;
      default: n_stages = 2; break;
    }
    for (int si = 0; si < n_stages; ++si) {
      StageSpec st;
      bool narrow = (p.shape == TqShape::BB && si == 1);
      int max_tasks = narrow ? 3 : (p.shape == TqShape::BB ? 24 : 12);
      int min_tasks = narrow ? 1 : 4;
      st.task_count = min_tasks + static_cast<int>(u(rng) * (max_tasks - min_tasks + 1));
      st.task_duration = draw_duration(p.shape, rng) * p.duration_scale;
      ResourceVector d(p.dims);
      for (size_t k = 0; k < p.dims; ++k) d[k] = (0.25 + 0.75 * u(rng)) * p.task_demand_scale;
      st.task_demand = d;
      job.stages.push_back(std::move(st));
      if (si > 0) job.stage_dependencies.emplace_back(si - 1, si);
    }
    q.jobs.push_back(std::move(job));
  }
  return q;
}

// --- Uncertainty ------------------------------------------------------------

QueueSpec inject_estimation_error(const QueueSpec& spec, double std_pct, std::uint64_t seed) {
  if (std_pct < 0.0 || std_pct > 50.0) {
    throw SpecError("inject_estimation_error: std_pct must lie in [0, 50]");
  }
  QueueSpec out = spec;
  if (std_pct == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> err(0.0, std_pct);
  // One draw per task type (stage); tasks of a stage stay equivalent.
  auto perturb = [&](JobSpec& job) {
    for (auto& st : job.stages) {
      double factor = std::max(1.0 + err(rng) / 100.0, 0.01);
      st.task_demand = st.task_demand * factor;
      st.task_duration *= factor;
    }
  };
  for (auto& b : out.bursts) {
    for (auto& j : b.jobs) perturb(j);
  }
  for (auto& j : out.jobs) perturb(j);
  out.declared_demand_is_estimate = true;
  return out;
}

// Acklam's rational approximation for the standard normal quantile, polished
// with one Newton step on the erfc-based CDF.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw SpecError("normal_quantile: p must lie in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double e = normal_cdf(x) - p;
  double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  if (pdf > 0.0) x -= e / pdf;
  return x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double marginal_quantile(const DemandDistribution::Marginal& m, double p) {
  if (!(p > 0.0 && p < 1.0)) throw SpecError("marginal_quantile: p must lie in (0,1)");
  if (!m.samples.empty()) {
    std::vector<double> sorted = m.samples;
    std::sort(sorted.begin(), sorted.end());
    size_t idx = static_cast<size_t>(std::ceil(p * sorted.size()));
    idx = std::min(std::max<size_t>(idx, 1), sorted.size()) - 1;
    return sorted[idx];
  }
  if (m.sigma == 0.0) return m.mu;
  // Quantile of Normal(mu, sigma) truncated at 0: renormalize the mass below
  // zero onto the positive axis.
  double phi0 = normal_cdf(-m.mu / m.sigma);
  double pp = phi0 + p * (1.0 - phi0);
  return m.mu + m.sigma * normal_quantile(pp);
}

ResourceVector alpha_strategy_demand(const DemandDistribution& dist, double alpha, size_t dims) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw SpecError("alpha_strategy_demand: alpha must lie in (0,1)");
  }
  dist.validate();
  if (dist.marginals.size() != dims) {
    throw StructuralError("alpha_strategy_demand: marginal count does not match K");
  }
  double p = dist.correlation == DemandDistribution::Correlation::Independent
                 ? std::pow(alpha, 1.0 / static_cast<double>(dims))
                 : alpha;
  ResourceVector d(dims);
  for (size_t k = 0; k < dims; ++k) d[k] = marginal_quantile(dist.marginals[k], p);
  return d;
}

ResourceVector sample_demand(const DemandDistribution& dist, std::uint64_t& rng_state) {
  std::mt19937_64 rng(rng_state);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  size_t dims = dist.marginals.size();
  ResourceVector d(dims);
  if (dist.correlation == DemandDistribution::Correlation::PerfectlyCorrelated) {
    double uu = u(rng);
    uu = std::min(std::max(uu, 1e-12), 1.0 - 1e-12);
    for (size_t k = 0; k < dims; ++k) d[k] = marginal_quantile(dist.marginals[k], uu);
  } else {
    for (size_t k = 0; k < dims; ++k) {
      const auto& m = dist.marginals[k];
      if (!m.samples.empty()) {
        d[k] = m.samples[static_cast<size_t>(u(rng) * m.samples.size()) % m.samples.size()];
      } else if (m.sigma == 0.0) {
        d[k] = m.mu;
      } else {
        std::normal_distribution<double> n(m.mu, m.sigma);
        double x = n(rng);
        while (x < 0.0) x = n(rng);  // truncation at 0 by rejection
        d[k] = x;
      }
    }
  }
  rng_state = rng();
  return d;
}

QueueSpec synth_lq_stochastic(const StochasticLqParams& p) {
  p.distribution.validate();
  QueueSpec q = synth_lq(p.base);
  size_t dims = p.distribution.marginals.size();
  ResourceVector declared(dims);
  if (p.declared == "alpha") {
    declared = alpha_strategy_demand(p.distribution, p.base.alpha, dims);
  } else if (p.declared == "mean") {
    for (size_t k = 0; k < dims; ++k) declared[k] = p.distribution.marginals[k].mu;
  } else {
    throw ConfigError("synth_lq_stochastic: declared must be 'mean' or 'alpha'");
  }
  // The declared per-burst demand is the total; per-task demand spreads it
  // over jobs*tasks*duration as in the deterministic generator.
  double per_task =
      static_cast<double>(p.base.jobs_per_burst) * p.base.tasks_per_job * p.base.task_duration;
  std::uint64_t state = p.seed;
  DemandDistribution per_job = p.distribution;
  if (p.per_job_variation) {
    for (auto& m : per_job.marginals) {
      m.mu /= p.base.jobs_per_burst;
      m.sigma /= p.base.jobs_per_burst;
    }
  }
  for (auto& b : q.bursts) {
    if (b.demand.is_zero()) continue;  // trailing marker burst
    b.demand = declared;
    if (p.per_job_variation) {
      double job_tasks = static_cast<double>(p.base.tasks_per_job) * p.base.task_duration;
      for (auto& job : b.jobs) {
        ResourceVector actual = sample_demand(per_job, state);
        for (auto& st : job.stages) st.task_demand = actual / job_tasks;
      }
    } else {
      ResourceVector actual = sample_demand(p.distribution, state);
      ResourceVector task_demand = actual / per_task;
      for (auto& job : b.jobs) {
        for (auto& st : job.stages) st.task_demand = task_demand;
      }
    }
  }
  q.demand_distribution = p.distribution;
  q.declared_demand_is_estimate = true;
  return q;
}

}  // namespace bopf
