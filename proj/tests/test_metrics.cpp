#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "bopf/metrics.hpp"
#include "bopf/workload.hpp"

using namespace bopf;

namespace {

ClusterConfig cluster_10_10() {
  ClusterConfig c;
  c.capacity = ResourceVector{10.0, 10.0};
  c.resource_names = {"cpu", "mem"};
  c.n_min = 2;
  return c;
}

EventLog synthetic_log(std::vector<SimEvent> events) {
  EventLog log;
  log.capacity = ResourceVector{10.0, 10.0};
  log.policy = "drf";
  SimEvent start;
  start.kind = EventKind::RunStart;
  log.events.push_back(start);
  for (auto& e : events) log.events.push_back(std::move(e));
  SimEvent end;
  end.kind = EventKind::RunEnd;
  end.t = 1000.0;
  log.events.push_back(end);
  return log;
}

SimEvent job_complete(const std::string& q, double arrival, double completion) {
  SimEvent e;
  e.kind = EventKind::JobComplete;
  e.queue = q;
  e.job = q + "/j";
  e.value = arrival;
  e.t = completion;
  return e;
}

QueueSpec wide_tq(const std::string& id, int jobs, double task_dur, std::uint64_t seed) {
  QueueSpec q;
  q.id = id;
  q.kind = QueueKind::TQ;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.8, 1.2);
  for (int j = 0; j < jobs; ++j) {
    JobSpec job;
    job.id = "j" + std::to_string(j);
    StageSpec st;
    st.task_count = 30;
    st.task_demand = ResourceVector{0.4 * u(rng), 0.4 * u(rng)};
    st.task_duration = task_dur * u(rng);
    job.stages.push_back(st);
    q.jobs.push_back(std::move(job));
  }
  return q;
}

}  // namespace

TEST_CASE("avg completion over simple logs") {
  auto log = synthetic_log({job_complete("q", 0.0, 10.0)});
  CHECK(avg_completion(log, nullptr) == doctest::Approx(10.0));
  log = synthetic_log({job_complete("q", 0.0, 10.0), job_complete("q", 0.0, 30.0)});
  CHECK(avg_completion(log, nullptr) == doctest::Approx(20.0));
}

TEST_CASE("avg completion depends on timestamps only, not event order") {
  auto a = synthetic_log({job_complete("q", 0.0, 10.0), job_complete("p", 5.0, 30.0)});
  auto b = synthetic_log({job_complete("p", 5.0, 30.0), job_complete("q", 0.0, 10.0)});
  CHECK(avg_completion(a, nullptr) == doctest::Approx(avg_completion(b, nullptr)));
}

TEST_CASE("factor of improvement of a log against itself is exactly 1") {
  auto log = synthetic_log({job_complete("q", 0.0, 12.0)});
  CHECK(factor_of_improvement(log, log, nullptr) == 1.0);
}

TEST_CASE("deadline fraction counts arrived bursts, hits only on time") {
  std::vector<SimEvent> evs;
  for (int n = 0; n < 4; ++n) {
    SimEvent a;
    a.kind = EventKind::BurstArrival;
    a.queue = "lq0";
    a.burst = n;
    a.t = 100.0 * n;
    a.value = 100.0 * n + 30.0;
    a.vec = ResourceVector{10.0, 10.0};
    evs.push_back(a);
    if (n < 3) {  // the last burst never completes
      SimEvent cpl;
      cpl.kind = EventKind::BurstComplete;
      cpl.queue = "lq0";
      cpl.burst = n;
      cpl.t = 100.0 * n + (n == 1 ? 40.0 : 20.0);
      cpl.value = a.value;
      cpl.flag = cpl.t <= a.value;
      evs.push_back(cpl);
    }
  }
  auto log = synthetic_log(std::move(evs));
  CHECK(deadline_fraction(log, "lq0") == doctest::Approx(0.5));  // 2 hits / 4 arrived
}

TEST_CASE("fluid hard-class run: deadline fraction 1 and margins from real runs") {
  RunSpec spec;
  spec.cluster = cluster_10_10();
  LqParams lp;
  lp.id = "lq0";
  lp.period = 200.0;
  lp.deadline_window = 60.0;
  lp.n_bursts = 8;
  lp.burst_demand = ResourceVector{330.0, 330.0};  // within C*p/denominator = 500
  lp.tasks_per_job = 12;
  lp.task_duration = 15.0;
  lp.trailing_marker = true;
  spec.queues = {synth_lq(lp), wide_tq("tq0", 40, 6.0, 3), wide_tq("tq1", 40, 6.0, 4)};
  spec.policy = Policy::Bopf;
  spec.mode = SimMode::Fluid;
  spec.horizon = lp.n_bursts * lp.period + 100.0;
  EventLog log = run(spec);
  CHECK(deadline_fraction(log, "lq0") == doctest::Approx(1.0));

  // Long-term fairness margins on constant-membership windows.
  for (const auto& seg : membership_segments(log)) {
    if (seg.lqs.empty() || seg.tqs.empty()) continue;
    for (const auto& m : fairness_check(log, seg.t0, seg.t1)) {
      CHECK(m.margin >= -1e-6);
    }
  }

  // Strict priority with an oversized LQ produces a negative margin.
  RunSpec sp_spec = spec;
  LqParams big = lp;
  big.burst_demand = ResourceVector{1600.0, 1600.0};
  big.deadline_window = 170.0;
  big.task_duration = 42.5;
  sp_spec.queues[0] = synth_lq(big);
  sp_spec.policy = Policy::Sp;
  EventLog sp_log = run(sp_spec);
  double worst = 1e9;
  for (const auto& seg : membership_segments(sp_log)) {
    if (seg.lqs.empty() || seg.tqs.empty()) continue;
    for (const auto& m : fairness_check(sp_log, seg.t0, seg.t1)) {
      worst = std::min(worst, m.margin);
    }
  }
  CHECK(worst < 0.0);
}

TEST_CASE("all-idle windows have zero margins") {
  std::vector<SimEvent> evs;
  SimEvent adm;
  adm.kind = EventKind::AdmissionDecision;
  adm.queue = "tq0";
  adm.info = "elastic";
  evs.push_back(adm);
  SimEvent adm2 = adm;
  adm2.queue = "lq0";
  adm2.info = "hard";
  evs.push_back(adm2);
  SimEvent arr;
  arr.kind = EventKind::BurstArrival;
  arr.queue = "lq0";
  arr.burst = 0;
  arr.t = 0.0;
  arr.value = 10.0;
  arr.vec = ResourceVector{5.0, 5.0};
  evs.push_back(arr);
  auto log = synthetic_log(std::move(evs));
  auto margins = fairness_check(log, 0.0, 100.0);
  REQUIRE(!margins.empty());
  for (const auto& m : margins) CHECK(m.margin == doctest::Approx(0.0));
}

TEST_CASE("run summary serializes and reflects the log") {
  RunSpec spec;
  spec.cluster = cluster_10_10();
  LqParams lp;
  lp.id = "lq0";
  lp.period = 100.0;
  lp.deadline_window = 50.0;
  lp.n_bursts = 2;
  lp.burst_demand = ResourceVector{400.0, 300.0};
  lp.trailing_marker = true;
  spec.queues = {synth_lq(lp)};
  spec.policy = Policy::Bopf;
  EventLog log = run(spec);
  RunSummary s = summarize(log);
  REQUIRE(s.queues.count("lq0"));
  CHECK(s.queues["lq0"].is_lq);
  CHECK(s.queues["lq0"].admission_class == "hard");
  CHECK(s.queues["lq0"].bursts.size() == 2);  // marker burst excluded
  CHECK(s.queues["lq0"].deadline_fraction == doctest::Approx(1.0));
  std::string json = s.to_json();
  CHECK(json.find("\"policy\"") != std::string::npos);
  CHECK(json.find("lq0") != std::string::npos);
}

TEST_CASE("utilization stays in [0,1] per resource") {
  RunSpec spec;
  spec.cluster = cluster_10_10();
  spec.queues = {wide_tq("tq0", 5, 5.0, 2)};
  spec.policy = Policy::Drf;
  EventLog log = run(spec);
  ResourceVector u = utilization(log);
  for (size_t k = 0; k < u.size(); ++k) {
    CHECK(u[k] >= 0.0);
    CHECK(u[k] <= 1.0 + 1e-6);
  }
}
