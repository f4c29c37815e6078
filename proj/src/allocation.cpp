#include "bopf/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bopf/errors.hpp"

namespace bopf {

Policy parse_policy(const std::string& name) {
  if (name == "bopf") return Policy::Bopf;
  if (name == "drf") return Policy::Drf;
  if (name == "sp") return Policy::Sp;
  if (name == "mbvt") return Policy::Mbvt;
  if (name == "nbopf") return Policy::Nbopf;
  throw ConfigError("unknown policy '" + name + "' (expected bopf|drf|sp|mbvt|nbopf)");
}

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::Bopf: return "bopf";
    case Policy::Drf: return "drf";
    case Policy::Sp: return "sp";
    case Policy::Mbvt: return "mbvt";
    case Policy::Nbopf: return "nbopf";
  }
  return "?";
}

ResourceVector ShareLevels::total(size_t dims) const {
  ResourceVector t(dims);
  for (const auto& [id, v] : share) t += v;
  return t;
}

const ResourceVector& ShareLevels::of(const std::string& id) const {
  auto it = share.find(id);
  if (it == share.end()) throw StructuralError("share levels: unknown queue " + id);
  return it->second;
}

namespace {

constexpr double kTiny = 1e-12;

// Largest lambda in [0,1] such that lambda*demand fits within avail, honoring
// the Leontief consumption profile (components the queue does not demand are
// ignored).
double leontief_fit(const ResourceVector& demand, const ResourceVector& avail) {
  double lambda = 1.0;
  for (size_t k = 0; k < demand.size(); ++k) {
    if (demand[k] > kTiny) lambda = std::min(lambda, std::max(avail[k], 0.0) / demand[k]);
  }
  return std::max(lambda, 0.0);
}

}  // namespace

ShareLevels drf_fill(const std::vector<QueueDemand>& demands, const ResourceVector& capacity,
                     const ResourceVector* normalization) {
  const size_t dims = capacity.size();
  const ResourceVector& norm = normalization ? *normalization : capacity;
  if (norm.size() != dims) throw StructuralError("drf_fill: normalization dimension mismatch");
  ShareLevels out;
  out.policy = "drf";

  // The offered pool may have exhausted components (leftover after higher
  // tiers); queues needing such a component are frozen at zero outright and
  // dominant shares are measured over the components the pool still has.
  double cap_eps = kTiny * std::max(1.0, capacity.max_component());

  struct Entry {
    const QueueDemand* q;
    double satiation;       // dominant share of the full demand
    ResourceVector unit;    // demand scaled to dominant share 1
  };
  std::vector<Entry> active;
  for (const auto& q : demands) {
    if (q.demand.size() != dims) throw StructuralError("drf_fill: demand dimension mismatch");
    out.share.emplace(q.id, ResourceVector(dims));
    double ds = 0.0;
    bool blocked = false;
    for (size_t k = 0; k < dims; ++k) {
      if (q.demand[k] <= kTiny) continue;
      if (capacity[k] <= cap_eps || norm[k] <= 0.0) {
        blocked = true;
        break;
      }
      ds = std::max(ds, q.demand[k] / norm[k]);
    }
    if (!blocked && ds > kTiny) active.push_back({&q, ds, q.demand / ds});
  }
  std::sort(active.begin(), active.end(),
            [](const Entry& a, const Entry& b) { return a.q->id < b.q->id; });

  ResourceVector residual = capacity;
  double level = 0.0;
  while (!active.empty()) {
    ResourceVector growth(dims);
    for (const auto& e : active) growth += e.unit;

    double step = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < dims; ++k) {
      if (growth[k] > kTiny) step = std::min(step, residual[k] / growth[k]);
    }
    for (const auto& e : active) step = std::min(step, e.satiation - level);
    step = std::max(step, 0.0);

    if (step > 0.0) {
      for (const auto& e : active) out.share[e.q->id] += e.unit * step;
      residual = residual.saturating_sub(growth * step);
      level += step;
    }

    // Retire satiated queues (snapping to the exact demand) and freeze queues
    // that touch a saturated resource.
    std::vector<bool> saturated(dims, false);
    for (size_t k = 0; k < dims; ++k) {
      saturated[k] = residual[k] <= kTiny * std::max(capacity[k], 1.0);
    }
    size_t before = active.size();
    std::erase_if(active, [&](const Entry& e) {
      if (e.satiation - level <= kTiny * std::max(e.satiation, 1.0)) {
        out.share[e.q->id] = e.q->demand;
        return true;
      }
      for (size_t k = 0; k < dims; ++k) {
        if (saturated[k] && e.unit[k] > kTiny) return true;
      }
      return false;
    });
    if (active.size() == before) break;  // numerical stalemate guard
  }
  return out;
}

ShareLevels strict_priority(const std::vector<QueueDemand>& lqs,
                            const std::vector<QueueDemand>& tqs,
                            const ResourceVector& capacity,
                            const AllocOptions& opts) {
  ShareLevels out = drf_fill(lqs, capacity);
  out.policy = "sp";
  ResourceVector leftover = capacity.saturating_sub(out.total(capacity.size()));
  ShareLevels tq_shares = drf_fill(tqs, leftover, &capacity);
  for (auto& [id, v] : tq_shares.share) out.share.emplace(id, std::move(v));

  if (opts.spare_step) {
    std::vector<QueueDemand> unsat;
    for (const auto& list : {lqs, tqs}) {
      for (const auto& q : list) {
        ResourceVector unmet = q.demand.saturating_sub(out.of(q.id));
        if (!unmet.is_zero(kFeasibilitySlack)) unsat.push_back({q.id, unmet});
      }
    }
    ResourceVector residual = capacity.saturating_sub(out.total(capacity.size()));
    ShareLevels spare = drf_fill(unsat, residual, &capacity);
    for (const auto& [id, v] : spare.share) out.share[id] += v;
  }
  return out;
}

ShareLevels bopf_allocate(const std::vector<HardEntry>& hard,
                          const std::vector<SoftEntry>& soft,
                          const std::vector<QueueDemand>& elastic,
                          const ResourceVector& capacity,
                          const AllocOptions& opts) {
  const size_t dims = capacity.size();
  ShareLevels out;
  out.policy = "bopf";

  // Tier 1: hard guarantees at their constant provisioned rate.
  ResourceVector hard_total(dims);
  for (const auto& h : hard) {
    out.share[h.id] = h.rate.min(h.demand);
    hard_total += h.rate;
  }
  if (!hard_total.leq(capacity, kFeasibilitySlack * std::max(1.0, capacity.max_component()))) {
    throw StructuralError(
        "bopf_allocate: hard tier oversubscribed (" + hard_total.to_string() + " > " +
        capacity.to_string() + "); admission state is inconsistent");
  }
  ResourceVector leftover = capacity.saturating_sub(hard_total);

  // Tier 2: soft queues take the uncommitted remainder in SRPT order, each
  // up to what it can consume, until demand is met or nothing remains.
  std::vector<SoftEntry> srpt = soft;
  std::sort(srpt.begin(), srpt.end(), [](const SoftEntry& a, const SoftEntry& b) {
    if (a.remaining_dominant != b.remaining_dominant) {
      return a.remaining_dominant < b.remaining_dominant;
    }
    if (a.deadline != b.deadline) return a.deadline < b.deadline;
    return a.id < b.id;
  });
  for (const auto& s : srpt) {
    ResourceVector grant = s.demand * leontief_fit(s.demand, leftover);
    out.share[s.id] = grant;
    leftover = leftover.saturating_sub(grant);
  }

  // Tier 3: elastic queues split the leftover via DRF (dominant shares are
  // always measured against the full cluster capacity).
  ShareLevels el = drf_fill(elastic, leftover, &capacity);
  for (auto& [id, v] : el.share) out.share.emplace(id, std::move(v));

  // Spare pass: whatever no owner can use goes to queues that still want more.
  if (opts.spare_step) {
    std::vector<QueueDemand> unsat;
    auto want = [&](const std::string& id, const ResourceVector& demand) {
      ResourceVector unmet = demand.saturating_sub(out.of(id));
      if (!unmet.is_zero(kFeasibilitySlack)) unsat.push_back({id, unmet});
    };
    for (const auto& h : hard) want(h.id, h.demand);
    for (const auto& s : soft) want(s.id, s.demand);
    for (const auto& e : elastic) want(e.id, e.demand);

    ResourceVector residual = capacity.saturating_sub(out.total(dims));
    ShareLevels spare = drf_fill(unsat, residual, &capacity);
    for (const auto& [id, v] : spare.share) out.share[id] += v;
  }
  return out;
}

ShareLevels mbvt_allocate(const MbvtState& state,
                          const std::vector<QueueDemand>& demands,
                          const ResourceVector& capacity,
                          const AllocOptions& opts) {
  ShareLevels out;
  out.policy = "mbvt";
  for (const auto& q : demands) out.share.emplace(q.id, ResourceVector(capacity.size()));

  double min_e = std::numeric_limits<double>::infinity();
  for (const auto& q : demands) {
    auto it = state.queues.find(q.id);
    if (it == state.queues.end()) throw StructuralError("mbvt: queue " + q.id + " has no state");
    if (!q.demand.is_zero()) min_e = std::min(min_e, it->second.effective_virtual_time);
  }

  std::vector<QueueDemand> front;
  for (const auto& q : demands) {
    if (q.demand.is_zero()) continue;
    if (state.queues.at(q.id).effective_virtual_time <= min_e + kCompareSlack) front.push_back(q);
  }
  ShareLevels main = drf_fill(front, capacity);
  for (const auto& [id, v] : main.share) out.share[id] = v;

  if (opts.spare_step) {
    std::vector<QueueDemand> unsat;
    for (const auto& q : demands) {
      ResourceVector unmet = q.demand.saturating_sub(out.of(q.id));
      if (!unmet.is_zero(kFeasibilitySlack)) unsat.push_back({q.id, unmet});
    }
    ResourceVector residual = capacity.saturating_sub(out.total(capacity.size()));
    ShareLevels spare = drf_fill(unsat, residual, &capacity);
    for (const auto& [id, v] : spare.share) out.share[id] += v;
  }
  return out;
}

}  // namespace bopf
