#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bopf/allocation.hpp"
#include "bopf/errors.hpp"
#include "bopf/proptest.hpp"

using namespace bopf;

namespace {

ResourceVector big(const ResourceVector& profile) { return profile * 1000.0; }

void check_feasible(const ShareLevels& levels, const ResourceVector& capacity) {
  ResourceVector total = levels.total(capacity.size());
  CHECK(total.leq(capacity, 1e-6 * std::max(1.0, capacity.max_component())));
  for (const auto& [id, v] : levels.share) {
    for (size_t k = 0; k < v.size(); ++k) CHECK(v[k] >= -1e-9);
  }
}

}  // namespace

TEST_CASE("policy names round-trip") {
  for (const char* n : {"bopf", "drf", "sp", "mbvt", "nbopf"}) {
    CHECK(policy_name(parse_policy(n)) == std::string(n));
  }
  CHECK_THROWS_AS(parse_policy("fifo"), ConfigError);
}

TEST_CASE("drf_fill reproduces the classic two-queue split") {
  ResourceVector c{9.0, 18.0};
  auto levels = drf_fill({{"a", big({1.0, 4.0})}, {"b", big({3.0, 1.0})}}, c);
  CHECK(levels.of("a")[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(levels.of("a")[1] == doctest::Approx(12.0).epsilon(1e-9));
  CHECK(levels.of("b")[0] == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(levels.of("b")[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(dominant_share(levels.of("a"), c) == doctest::Approx(2.0 / 3.0));
  CHECK(dominant_share(levels.of("b"), c) == doctest::Approx(2.0 / 3.0));
  check_feasible(levels, c);
}

TEST_CASE("drf_fill caps at demand without contention") {
  ResourceVector c{10.0, 10.0};
  auto levels = drf_fill({{"a", ResourceVector{5.0, 5.0}}}, c);
  CHECK(levels.of("a")[0] == doctest::Approx(5.0));
  CHECK(levels.of("a")[1] == doctest::Approx(5.0));
}

TEST_CASE("drf_fill zero demands yield zero shares") {
  ResourceVector c{10.0, 10.0};
  auto levels = drf_fill({{"a", ResourceVector{0.0, 0.0}}, {"b", ResourceVector{0.0, 0.0}}}, c);
  CHECK(levels.of("a").is_zero());
  CHECK(levels.of("b").is_zero());
}

TEST_CASE("drf_fill continues filling after unrelated queues freeze") {
  // q1 and q2 saturate resource 1; q0 only needs resource 0 and keeps going.
  ResourceVector c{10.0, 100.0};
  auto levels = drf_fill({{"q0", ResourceVector{40.0, 0.0}},
                          {"q1", ResourceVector{0.0, 100.0}},
                          {"q2", ResourceVector{0.0, 100.0}}},
                         c);
  CHECK(levels.of("q1")[1] == doctest::Approx(50.0));
  CHECK(levels.of("q2")[1] == doctest::Approx(50.0));
  CHECK(levels.of("q0")[0] == doctest::Approx(10.0));
  check_feasible(levels, c);
}

TEST_CASE("drf_fill equalizes dominant shares among unsatiated queues") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    size_t dims = 2 + static_cast<size_t>(u(rng) * 2);
    ResourceVector c(dims);
    for (size_t k = 0; k < dims; ++k) c[k] = 50.0 + u(rng) * 100.0;
    std::vector<QueueDemand> demands;
    int n = 2 + static_cast<int>(u(rng) * 3);
    for (int q = 0; q < n; ++q) {
      ResourceVector d(dims);
      for (size_t k = 0; k < dims; ++k) d[k] = u(rng) * c[k] * 2.0;
      demands.push_back({"q" + std::to_string(q), d});
    }
    auto levels = drf_fill(demands, c);
    check_feasible(levels, c);
    // Queues far from satiation share one dominant level.
    double level = -1.0;
    for (const auto& q : demands) {
      double got = dominant_share(levels.of(q.id), c);
      double want = dominant_share(q.demand, c);
      if (got + 1e-7 < want) {  // unsatiated
        if (level < 0.0) level = got;
        CHECK(got == doctest::Approx(level).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("drf_fill matches the water-filling oracle") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    size_t dims = 2 + static_cast<size_t>(u(rng) * 2);
    ResourceVector c(dims);
    for (size_t k = 0; k < dims; ++k) c[k] = 40.0 + u(rng) * 120.0;
    std::vector<QueueDemand> demands;
    int n = 1 + static_cast<int>(u(rng) * 4);
    for (int q = 0; q < n; ++q) {
      ResourceVector d(dims);
      for (size_t k = 0; k < dims; ++k) d[k] = u(rng) < 0.25 ? 0.0 : u(rng) * c[k] * 1.5;
      demands.push_back({"q" + std::to_string(q), d});
    }
    auto levels = drf_fill(demands, c);
    auto oracle = water_filling_oracle(demands, c, 1e-4);
    for (const auto& q : demands) {
      CHECK(dominant_share(levels.of(q.id), c) ==
            doctest::Approx(dominant_share(oracle[q.id], c)).epsilon(0).scale(1).epsilon(1e-3));
    }
  }
}

TEST_CASE("strict priority starves TQs under an oversized LQ") {
  ResourceVector c{10.0, 10.0};
  auto levels = strict_priority({{"lq0", big({1.0, 1.0})}}, {{"tq0", big({1.0, 1.0})}}, c);
  CHECK(dominant_share(levels.of("lq0"), c) == doctest::Approx(1.0));
  CHECK(levels.of("tq0").is_zero(1e-9));
}

TEST_CASE("strict priority reduces to DRF over TQs when LQs idle") {
  ResourceVector c{9.0, 18.0};
  auto levels = strict_priority({}, {{"a", big({1.0, 4.0})}, {"b", big({3.0, 1.0})}}, c);
  CHECK(levels.of("a")[0] == doctest::Approx(3.0));
  CHECK(levels.of("b")[0] == doctest::Approx(6.0));
}

TEST_CASE("strict priority resolves LQ conflicts with DRF among them") {
  ResourceVector c{9.0, 18.0};
  auto levels = strict_priority({{"a", big({1.0, 4.0})}, {"b", big({3.0, 1.0})}}, {}, c);
  CHECK(dominant_share(levels.of("a"), c) == doctest::Approx(2.0 / 3.0));
  CHECK(dominant_share(levels.of("b"), c) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("bopf tiers: hard rate, leftover to elastic") {
  ResourceVector c{10.0, 10.0};
  std::vector<HardEntry> hard{{"lq0", ResourceVector{8.0, 6.0}, big({8.0, 6.0})}};
  std::vector<QueueDemand> elastic{{"tq0", big({1.0, 1.0})}};
  auto levels = bopf_allocate(hard, {}, elastic, c);
  CHECK(levels.of("lq0")[0] == doctest::Approx(8.0));
  CHECK(levels.of("lq0")[1] == doctest::Approx(6.0));
  // Leftover <2,4>: the symmetric elastic queue is capped by resource 0.
  CHECK(levels.of("tq0")[0] == doctest::Approx(2.0));
  CHECK(levels.of("tq0")[1] == doctest::Approx(2.0));
  check_feasible(levels, c);
}

TEST_CASE("bopf with no hard or soft queues is exactly drf_fill") {
  ResourceVector c{9.0, 18.0};
  std::vector<QueueDemand> elastic{{"a", big({1.0, 4.0})}, {"b", big({3.0, 1.0})}};
  auto bopf = bopf_allocate({}, {}, elastic, c);
  auto drf = drf_fill(elastic, c);
  for (const auto& q : elastic) {
    for (size_t k = 0; k < c.size(); ++k) CHECK(bopf.of(q.id)[k] == drf.of(q.id)[k]);
  }
}

TEST_CASE("soft tier is SRPT ordered: smallest remaining dominant first") {
  ResourceVector c{10.0, 10.0};
  std::vector<SoftEntry> soft{
      {"big", big({1.0, 1.0}), 50.0, 100.0},
      {"small", big({1.0, 1.0}), 30.0, 100.0},
  };
  auto levels = bopf_allocate({}, soft, {}, c);
  // Full leftover goes to the smaller remaining queue.
  CHECK(levels.of("small")[0] == doctest::Approx(10.0));
  CHECK(levels.of("big")[0] == doctest::Approx(0.0));

  // Once the smaller is demand-capped, the next queue receives the rest.
  soft[1].demand = ResourceVector{4.0, 4.0};
  levels = bopf_allocate({}, soft, {}, c);
  CHECK(levels.of("small")[0] == doctest::Approx(4.0));
  CHECK(levels.of("big")[0] == doctest::Approx(6.0));
}

TEST_CASE("soft ties break by deadline then id") {
  ResourceVector c{10.0, 10.0};
  std::vector<SoftEntry> soft{
      {"b", big({1.0, 1.0}), 30.0, 90.0},
      {"a", big({1.0, 1.0}), 30.0, 80.0},
  };
  auto levels = bopf_allocate({}, soft, {}, c);
  CHECK(levels.of("a")[0] == doctest::Approx(10.0));
  CHECK(levels.of("b")[0] == doctest::Approx(0.0));
}

TEST_CASE("hard oversubscription aborts the epoch") {
  ResourceVector c{10.0, 10.0};
  std::vector<HardEntry> hard{{"a", ResourceVector{8.0, 8.0}, big({1.0, 1.0})},
                              {"b", ResourceVector{8.0, 8.0}, big({1.0, 1.0})}};
  CHECK_THROWS_AS(bopf_allocate(hard, {}, {}, c), StructuralError);
}

TEST_CASE("spare pass re-offers unusable share") {
  ResourceVector c{10.0, 10.0};
  // The hard queue is provisioned <8,6> but can only consume <2,2>; the
  // elastic queue should pick up the slack.
  std::vector<HardEntry> hard{{"lq0", ResourceVector{8.0, 6.0}, ResourceVector{2.0, 2.0}}};
  std::vector<QueueDemand> elastic{{"tq0", big({1.0, 1.0})}};
  auto with_spare = bopf_allocate(hard, {}, elastic, c);
  CHECK(with_spare.of("tq0")[0] == doctest::Approx(8.0));
  AllocOptions no_spare;
  no_spare.spare_step = false;
  auto without = bopf_allocate(hard, {}, elastic, c, no_spare);
  CHECK(without.of("tq0")[0] == doctest::Approx(2.0));
}

TEST_CASE("mbvt gives the whole cluster to the unique minimum virtual time") {
  ResourceVector c{10.0, 10.0};
  MbvtState st;
  st.queues["q1"] = {10.0, -10.0, true};
  st.queues["q2"] = {5.0, -5.0, true};
  auto levels = mbvt_allocate(st, {{"q1", big({1.0, 1.0})}, {"q2", big({1.0, 1.0})}}, c,
                              AllocOptions{false});
  CHECK(levels.of("q1")[0] == doctest::Approx(10.0));
  CHECK(levels.of("q2")[0] == doctest::Approx(0.0));

  // Equal virtual times degenerate to plain DRF.
  st.queues["q1"].effective_virtual_time = -5.0;
  levels = mbvt_allocate(st, {{"q1", big({1.0, 1.0})}, {"q2", big({1.0, 1.0})}}, c);
  CHECK(levels.of("q1")[0] == doctest::Approx(5.0));
  CHECK(levels.of("q2")[0] == doctest::Approx(5.0));
}

TEST_CASE("single queue with warp is the sole minimum and gets its demand") {
  ResourceVector c{10.0, 10.0};
  MbvtState st;
  st.queues["q1"] = {10.0, -10.0, true};
  auto levels = mbvt_allocate(st, {{"q1", ResourceVector{7.0, 3.0}}}, c);
  CHECK(levels.of("q1")[0] == doctest::Approx(7.0));
  CHECK(levels.of("q1")[1] == doctest::Approx(3.0));
}
