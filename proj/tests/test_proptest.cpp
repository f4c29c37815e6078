#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bopf/proptest.hpp"

using namespace bopf;

TEST_CASE("degenerate single-queue scenario holds all properties") {
  ScenarioBounds bounds;
  bounds.max_lqs = 1;
  bounds.max_tqs = 1;
  bounds.max_dims = 2;
  PropertyReport rep = property_suite(3, 11, bounds);
  INFO(rep.summary());
  CHECK(rep.ok());
}

TEST_CASE("a small randomized batch holds all properties") {
  PropertyReport rep = property_suite(10, 96321, ScenarioBounds{});
  INFO(rep.summary());
  CHECK(rep.ok());
  CHECK(rep.hard_bursts > 0);
  CHECK(rep.fairness_windows > 0);
  CHECK(rep.sandwich_bursts > 0);
}

TEST_CASE("mutation: skipping the spare pass breaks work conservation") {
  // A hard queue able to consume the whole cluster (fluid burst) plus a
  // demand-capped TQ: the residual is usable only through the spare pass.
  Scenario sc;
  sc.cluster.capacity = ResourceVector{10.0, 10.0};
  sc.cluster.resource_names = {"r0", "r1"};
  sc.cluster.n_min = 1;
  QueueSpec lq;
  lq.id = "lq0";
  lq.kind = QueueKind::LQ;
  lq.sla_fraction = 0.95;
  BurstSpec b;
  b.arrival_time = 0.0;
  b.deadline_window = 50.0;
  b.demand = ResourceVector{200.0, 200.0};
  lq.bursts.push_back(b);
  BurstSpec marker;
  marker.arrival_time = 100.0;
  marker.deadline_window = 1.0;
  marker.demand = ResourceVector{0.0, 0.0};
  lq.bursts.push_back(marker);
  QueueSpec tq;
  tq.id = "tq0";
  tq.kind = QueueKind::TQ;
  JobSpec job;
  job.id = "j0";
  StageSpec st;
  st.task_count = 1;
  st.task_demand = ResourceVector{2.0, 2.0};
  st.task_duration = 300.0;
  job.stages.push_back(st);
  tq.jobs.push_back(job);
  sc.queues = {lq, tq};
  sc.horizon = 400.0;

  auto count_violations = [&](bool spare) {
    AllocOptions opts;
    opts.spare_step = spare;
    EventLog log = run(sc.to_run(Policy::Bopf, SimMode::Fluid, opts));
    int violations = 0;
    const auto& C = log.capacity;
    for (const auto& frame : expand_snapshots(log)) {
      ResourceVector total(C.size());
      for (const auto& [id, row] : frame.rows) total += row.share;
      ResourceVector residual = C.saturating_sub(total);
      for (const auto& [id, row] : frame.rows) {
        ResourceVector unmet = row.demand.saturating_sub(row.share);
        bool has_unmet = false, can_consume = true;
        for (size_t k = 0; k < C.size(); ++k) {
          double eps = 1e-6 * C[k];
          if (unmet[k] > eps) {
            has_unmet = true;
            if (residual[k] <= eps) can_consume = false;
          }
        }
        violations += has_unmet && can_consume;
      }
    }
    return violations;
  };
  CHECK(count_violations(true) == 0);
  CHECK(count_violations(false) > 0);
}

TEST_CASE("outcome ordering is lexicographic") {
  Outcome truthful{3, true, 30.0};
  CHECK_FALSE(outcome_improves(Outcome{2, true, 1.0}, truthful));   // lower class
  CHECK(outcome_improves(Outcome{3, true, 20.0}, truthful));       // faster, same class
  CHECK_FALSE(outcome_improves(Outcome{3, true, 30.0}, truthful)); // identical
  CHECK_FALSE(outcome_improves(Outcome{3, false, 10.0}, truthful));
  CHECK(outcome_geq(truthful, Outcome{3, true, 30.0}));
}

TEST_CASE("strategyproofness grid on a pair of scenarios") {
  StrategyproofReport rep = strategyproofness_grid(2, 7);
  INFO(rep.summary());
  CHECK(rep.ok());
  CHECK(rep.misreports > 0);
  CHECK(rep.dominance_checks > 0);
}
