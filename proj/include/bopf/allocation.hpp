#pragma once

#include <map>
#include <string>
#include <vector>

#include "bopf/resource_vector.hpp"

namespace bopf {

enum class Policy { Bopf, Drf, Sp, Mbvt, Nbopf };

Policy parse_policy(const std::string& name);
const char* policy_name(Policy p);

struct AllocOptions {
  // Re-offer unused share to queues with unsatisfied demand (one pass per
  // epoch). Disabled only by the property harness's mutation check.
  bool spare_step = true;
};

// One queue's standing at an allocation epoch. demand is the maximum rate the
// queue could consume right now; consumption is Leontief along the demand
// direction, so a grant is always a scaled-down copy of it.
struct QueueDemand {
  std::string id;
  ResourceVector demand;
};

// Hard-guarantee queue inside an active burst window: constant rate d(n)/t(n).
struct HardEntry {
  std::string id;
  ResourceVector rate;
  ResourceVector demand;  // current consumable rate, caps the granted share
};

// Soft-guarantee queue inside an active burst window, ordered by SRPT.
struct SoftEntry {
  std::string id;
  ResourceVector demand;      // current consumable rate
  double remaining_dominant;  // dominant share-seconds of the burst still owed
  double deadline;
};

// Per-queue rate upper bounds for one epoch. Sums to <= capacity
// (within 1e-6) for every policy.
struct ShareLevels {
  double epoch = 0.0;
  std::string policy;
  std::map<std::string, ResourceVector> share;

  ResourceVector total(size_t dims) const;
  const ResourceVector& of(const std::string& id) const;
};

// Fluid dominant-resource fairness by progressive filling: all unsatiated
// queues advance at one common dominant-share level; a queue freezes when a
// resource it needs saturates and retires when its demand is met. Exact
// event-driven computation over the satiation/saturation breakpoints.
// Dominant shares are measured against `normalization` (the cluster capacity
// when the offered pool is only a leftover slice); by default the pool itself.
ShareLevels drf_fill(const std::vector<QueueDemand>& demands, const ResourceVector& capacity,
                     const ResourceVector* normalization = nullptr);

// LQs first (DRF among them on conflict), TQs share the remainder.
ShareLevels strict_priority(const std::vector<QueueDemand>& lqs,
                            const std::vector<QueueDemand>& tqs,
                            const ResourceVector& capacity,
                            const AllocOptions& opts = {});

// Three-tier allocation: hard rates, SRPT over the uncommitted remainder for
// soft queues, DRF over the leftover for the elastic class, then one spare
// pass over every queue with unmet demand.
ShareLevels bopf_allocate(const std::vector<HardEntry>& hard,
                          const std::vector<SoftEntry>& soft,
                          const std::vector<QueueDemand>& elastic,
                          const ResourceVector& capacity,
                          const AllocOptions& opts = {});

struct MbvtQueueState {
  double warp = 0.0;
  double effective_virtual_time = 0.0;  // E = A - W at burst arrival
  bool has_demand = false;
};

struct MbvtState {
  std::map<std::string, MbvtQueueState> queues;
};

// Queues tied at the minimum effective virtual time split capacity via DRF;
// the rest receive only spare. E advancement (at the consuming queue's
// dominant-share progress rate) is integrated by the engine.
ShareLevels mbvt_allocate(const MbvtState& state,
                          const std::vector<QueueDemand>& demands,
                          const ResourceVector& capacity,
                          const AllocOptions& opts = {});

}  // namespace bopf
