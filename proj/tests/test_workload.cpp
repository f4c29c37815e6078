#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "bopf/errors.hpp"
#include "bopf/workload.hpp"

using namespace bopf;

TEST_CASE("empty trace file loads as an empty list") {
  std::istringstream is("");
  CHECK(load_trace(is, 2).empty());
}

TEST_CASE("single-stage trace line loads one job") {
  std::istringstream is(
      R"({"job_id":"j1","queue_id":"tq0","stages":[{"tasks":4,"demand":[2,1],"duration":10}]})"
      "\n");
  auto entries = load_trace(is, 2);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].first == "tq0");
  CHECK(entries[0].second.stages.size() == 1);
  CHECK(entries[0].second.stages[0].task_count == 4);
}

TEST_CASE("cyclic dependencies are rejected with the cycle named") {
  std::istringstream is(
      R"({"job_id":"j1","queue_id":"q","stages":[{"tasks":1,"demand":[1,1],"duration":1},)"
      R"({"tasks":1,"demand":[1,1],"duration":1}],"deps":[[0,1],[1,0]]})"
      "\n");
  try {
    load_trace(is, 2);
    FAIL("expected a structural error");
  } catch (const StructuralError& ex) {
    std::string msg = ex.what();
    CHECK(msg.find("cycle") != std::string::npos);
    CHECK(msg.find("line 1") != std::string::npos);
  }
}

TEST_CASE("dimension mismatches carry line numbers") {
  std::istringstream is(
      R"({"job_id":"j1","queue_id":"q","stages":[{"tasks":1,"demand":[1,2,3],"duration":1}]})"
      "\n");
  CHECK_THROWS_AS(load_trace(is, 2), StructuralError);
}

TEST_CASE("trace round-trips through write_trace") {
  TqParams p;
  p.id = "tq0";
  p.n_jobs = 5;
  p.seed = 9;
  QueueSpec q = synth_tq(p);
  std::vector<std::pair<std::string, JobSpec>> entries;
  for (const auto& j : q.jobs) entries.emplace_back(q.id, j);
  std::ostringstream os;
  write_trace(os, entries);
  std::istringstream is(os.str());
  auto back = load_trace(is, 2);
  REQUIRE(back.size() == entries.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].second.id == entries[i].second.id);
    CHECK(back[i].second.stages.size() == entries[i].second.stages.size());
  }
}

TEST_CASE("synth_lq: periodic arrivals and exact demand realization") {
  LqParams p;
  p.id = "lq0";
  p.period = 300.0;
  p.deadline_window = 30.0;
  p.n_bursts = 5;
  p.burst_demand = ResourceVector{400.0, 300.0};
  p.tasks_per_job = 10;
  p.task_duration = 10.0;
  QueueSpec q = synth_lq(p);
  q.validate(2);
  REQUIRE(q.bursts.size() == 5);
  for (int n = 0; n < 5; ++n) {
    CHECK(q.bursts[n].arrival_time == doctest::Approx(300.0 * n));
  }
  // 10 tasks x 10 s x <4,3> = <400,300>.
  CHECK(q.bursts[0].jobs[0].stages[0].task_demand[0] == doctest::Approx(4.0));
  CHECK(q.bursts[0].jobs[0].stages[0].task_demand[1] == doctest::Approx(3.0));
}

TEST_CASE("synth_lq rejects empty burst series") {
  LqParams p;
  p.n_bursts = 0;
  p.burst_demand = ResourceVector{1.0, 1.0};
  CHECK_THROWS_AS(synth_lq(p), SpecError);
}

TEST_CASE("trailing marker adds a zero-demand burst one period later") {
  LqParams p;
  p.period = 100.0;
  p.deadline_window = 20.0;
  p.n_bursts = 3;
  p.burst_demand = ResourceVector{100.0, 100.0};
  p.trailing_marker = true;
  QueueSpec q = synth_lq(p);
  q.validate(2);
  REQUIRE(q.bursts.size() == 4);
  CHECK(q.bursts[3].arrival_time == doctest::Approx(300.0));
  CHECK(q.bursts[3].demand.is_zero());
  // Every real burst now uses the period as its admission interval.
  CHECK(q.burst_interval(2) == doctest::Approx(100.0));
}

TEST_CASE("estimation error: zero std is the identity") {
  LqParams p;
  p.period = 100.0;
  p.deadline_window = 20.0;
  p.n_bursts = 2;
  p.burst_demand = ResourceVector{100.0, 100.0};
  QueueSpec q = synth_lq(p);
  QueueSpec same = inject_estimation_error(q, 0.0, 7);
  CHECK(same.bursts[0].jobs[0].stages[0].task_duration ==
        q.bursts[0].jobs[0].stages[0].task_duration);
  CHECK_FALSE(same.declared_demand_is_estimate);
}

TEST_CASE("estimation error: seeded runs reproduce and clamp at 1%") {
  LqParams p;
  p.period = 100.0;
  p.deadline_window = 20.0;
  p.n_bursts = 3;
  p.burst_demand = ResourceVector{100.0, 100.0};
  QueueSpec q = synth_lq(p);
  QueueSpec a = inject_estimation_error(q, 50.0, 11);
  QueueSpec b = inject_estimation_error(q, 50.0, 11);
  CHECK(a.bursts[1].jobs[0].stages[0].task_duration ==
        b.bursts[1].jobs[0].stages[0].task_duration);
  CHECK(a.declared_demand_is_estimate);
  // Declared demand unchanged; factors never drop a task below 1% of original.
  CHECK(a.bursts[0].demand[0] == doctest::Approx(100.0));
  for (const auto& burst : a.bursts) {
    for (const auto& job : burst.jobs) {
      for (const auto& st : job.stages) {
        CHECK(st.task_duration >= 0.01 * q.bursts[0].jobs[0].stages[0].task_duration - 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(inject_estimation_error(q, 80.0, 1), SpecError);
}

TEST_CASE("estimation error preserves expected demand to first order") {
  // Many task types, one draw each: the mean perturbation factor converges
  // to 1 (clamping at std<=50 is a tail event with negligible mass).
  QueueSpec q;
  q.id = "tq";
  q.kind = QueueKind::TQ;
  JobSpec job;
  job.id = "j";
  for (int i = 0; i < 10000; ++i) {
    StageSpec st;
    st.task_count = 1;
    st.task_demand = ResourceVector{1.0, 1.0};
    st.task_duration = 1.0;
    job.stages.push_back(st);
  }
  q.jobs.push_back(std::move(job));
  QueueSpec perturbed = inject_estimation_error(q, 20.0, 23);
  double mean = 0.0;
  for (const auto& st : perturbed.jobs[0].stages) mean += st.task_duration;
  mean /= perturbed.jobs[0].stages.size();
  CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("alpha strategy quantiles match the numeric inverse-CDF oracle") {
  DemandDistribution dist;
  dist.marginals = {{100.0, 10.0, {}}, {100.0, 10.0, {}}};
  dist.correlation = DemandDistribution::Correlation::Independent;
  ResourceVector d = alpha_strategy_demand(dist, 0.95, 2);
  CHECK(d[0] == doctest::Approx(119.54).epsilon(0.0005));
  CHECK(d[1] == doctest::Approx(119.54).epsilon(0.0005));

  dist.correlation = DemandDistribution::Correlation::PerfectlyCorrelated;
  ResourceVector dc = alpha_strategy_demand(dist, 0.95, 2);
  CHECK(dc[0] == doctest::Approx(116.45).epsilon(0.0005));
}

TEST_CASE("alpha strategy degenerate sigma returns the mean") {
  DemandDistribution dist;
  dist.marginals = {{100.0, 0.0, {}}};
  CHECK(alpha_strategy_demand(dist, 0.99, 1)[0] == doctest::Approx(100.0));
}

TEST_CASE("alpha outside (0,1) is a domain error") {
  DemandDistribution dist;
  dist.marginals = {{100.0, 10.0, {}}};
  CHECK_THROWS_AS(alpha_strategy_demand(dist, 0.0, 1), SpecError);
  CHECK_THROWS_AS(alpha_strategy_demand(dist, 1.0, 1), SpecError);
}

TEST_CASE("alpha-strategy demand is nondecreasing in alpha and sigma") {
  for (double sigma : {2.0, 5.0, 10.0, 20.0}) {
    double prev = 0.0;
    for (double alpha : {0.5, 0.7, 0.9, 0.95, 0.99}) {
      DemandDistribution dist;
      dist.marginals = {{100.0, sigma, {}}, {100.0, sigma, {}}};
      double d = alpha_strategy_demand(dist, alpha, 2)[0];
      CHECK(d >= prev - 1e-9);
      prev = d;
    }
  }
  DemandDistribution lo, hi;
  lo.marginals = {{100.0, 5.0, {}}, {100.0, 5.0, {}}};
  hi.marginals = {{100.0, 15.0, {}}, {100.0, 15.0, {}}};
  CHECK(alpha_strategy_demand(hi, 0.95, 2)[0] >= alpha_strategy_demand(lo, 0.95, 2)[0]);
}

TEST_CASE("perfectly correlated demand never exceeds the independent request") {
  for (double alpha : {0.8, 0.9, 0.95}) {
    DemandDistribution dist;
    dist.marginals = {{100.0, 10.0, {}}, {100.0, 10.0, {}}, {100.0, 10.0, {}}};
    dist.correlation = DemandDistribution::Correlation::Independent;
    double ind = alpha_strategy_demand(dist, alpha, 3)[0];
    dist.correlation = DemandDistribution::Correlation::PerfectlyCorrelated;
    double cor = alpha_strategy_demand(dist, alpha, 3)[0];
    CHECK(cor <= ind + 1e-9);
  }
}

TEST_CASE("monte carlo: sampled bursts fit the alpha-strategy request") {
  DemandDistribution dist;
  dist.marginals = {{100.0, 10.0, {}}, {100.0, 10.0, {}}};
  ResourceVector request = alpha_strategy_demand(dist, 0.95, 2);
  std::uint64_t state = 1234;
  int fits = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    if (sample_demand(dist, state).leq(request, 0.0)) ++fits;
  }
  CHECK(static_cast<double>(fits) / n >= 0.95 - 0.01);
}

TEST_CASE("empirical marginals use order statistics") {
  DemandDistribution::Marginal m;
  m.samples = {5.0, 1.0, 3.0, 2.0, 4.0};
  CHECK(marginal_quantile(m, 0.5) == doctest::Approx(3.0));
  CHECK(marginal_quantile(m, 0.95) == doctest::Approx(5.0));
}

TEST_CASE("stochastic bursts declare the strategy demand but realize samples") {
  StochasticLqParams sp;
  sp.base.id = "lq0";
  sp.base.period = 300.0;
  sp.base.deadline_window = 30.0;
  sp.base.n_bursts = 6;
  sp.base.burst_demand = ResourceVector{100.0, 100.0};
  sp.base.tasks_per_job = 10;
  sp.base.task_duration = 3.0;
  sp.base.trailing_marker = true;
  sp.distribution.marginals = {{100.0, 10.0, {}}, {100.0, 10.0, {}}};
  sp.declared = "alpha";
  sp.seed = 77;
  QueueSpec q = synth_lq_stochastic(sp);
  CHECK(q.declared_demand_is_estimate);
  CHECK(q.bursts[0].demand[0] == doctest::Approx(119.54).epsilon(0.001));
  // Realized work differs per burst.
  double d0 = q.bursts[0].jobs[0].stages[0].task_demand[0];
  double d1 = q.bursts[1].jobs[0].stages[0].task_demand[0];
  CHECK(d0 != doctest::Approx(d1).epsilon(1e-12));
  // The marker stays zero.
  CHECK(q.bursts.back().demand.is_zero());
}
