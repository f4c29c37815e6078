#include "bopf/admission.hpp"

#include <algorithm>

#include "bopf/errors.hpp"

namespace bopf {

const char* queue_class_name(QueueClass c) {
  switch (c) {
    case QueueClass::Hard: return "hard";
    case QueueClass::Soft: return "soft";
    case QueueClass::Elastic: return "elastic";
    case QueueClass::Rejected: return "rejected";
  }
  return "?";
}

AdmissionState::AdmissionState(ClusterConfig cluster)
    : cluster_(std::move(cluster)), committed_(cluster_.dims()) {
  cluster_.validate();
  inv_capacity_.assign(cluster_.dims(), 0.0);
  for (size_t k = 0; k < cluster_.dims(); ++k) inv_capacity_[k] = 1.0 / cluster_.capacity[k];
}

int AdmissionState::admission_denominator() const {
  return std::max(static_cast<int>(admitted_count()) + 1, cluster_.n_min);
}

bool AdmissionState::contains(const std::string& id) const { return seen_ids_.count(id) > 0; }

bool AdmissionState::is_member(const std::string& id) const {
  return seen_ids_.count(id) > 0 && rejected_.count(id) == 0;
}

QueueClass AdmissionState::class_of(const std::string& id) const {
  if (hard_.count(id)) return QueueClass::Hard;
  if (soft_.count(id)) return QueueClass::Soft;
  if (elastic_.count(id)) return QueueClass::Elastic;
  return QueueClass::Rejected;
}

ResourceVector AdmissionState::fair_share_bound(const QueueSpec& spec, size_t burst_index) const {
  double interval = spec.burst_interval(burst_index);  // throws on degenerate intervals
  return cluster_.capacity * (interval / admission_denominator());
}

double AdmissionState::guarantee_ratio(const QueueSpec& spec) const {
  double worst = 0.0;
  for (size_t n = 0; n < spec.bursts.size(); ++n) {
    double interval = spec.burst_interval(n);
    const auto& d = spec.bursts[n].demand;
    for (size_t k = 0; k < cluster_.dims(); ++k) {
      worst = std::max(worst, d[k] / (cluster_.capacity[k] * interval));
    }
  }
  return worst;
}

bool AdmissionState::check_safety(const QueueSpec&) const {
  // Admitting one more queue shifts every guarantee's denominator; existing
  // guarantees stay valid iff the cached worst demand-to-interval ratio still
  // fits. Vacuously true with no guaranteed queues.
  if (hard_.empty() && soft_.empty()) return true;
  return max_ratio_ <= 1.0 / admission_denominator() + kCompareSlack;
}

bool AdmissionState::check_fairness(const QueueSpec& candidate) const {
  // Normalized form of d <= C*interval/denominator, slack on the ratio.
  double limit = 1.0 / admission_denominator() + kCompareSlack;
  for (size_t n = 0; n < candidate.bursts.size(); ++n) {
    double inv_interval = 1.0 / candidate.burst_interval(n);
    const auto& d = candidate.bursts[n].demand;
    for (size_t k = 0; k < cluster_.dims(); ++k) {
      if (d[k] * inv_capacity_[k] * inv_interval > limit) return false;
    }
  }
  return true;
}

bool AdmissionState::check_resource(const QueueSpec& candidate) const {
  const bool empty_timeline = committed_.empty();
  for (const auto& b : candidate.bursts) {
    if (empty_timeline) {
      // No commitments anywhere: the condition reduces to rate <= capacity.
      for (size_t k = 0; k < cluster_.dims(); ++k) {
        if (b.demand[k] / b.deadline_window > cluster_.capacity[k] + kCompareSlack) return false;
      }
      continue;
    }
    ResourceVector committed_max = committed_.max_over(b.arrival_time, b.deadline());
    for (size_t k = 0; k < cluster_.dims(); ++k) {
      double headroom = cluster_.capacity[k] - committed_max[k];
      if (b.demand[k] / b.deadline_window > headroom + kCompareSlack) return false;
    }
  }
  return true;
}

QueueClass AdmissionState::admit_lq(const QueueSpec& candidate, bool soft_guarantee_enabled) {
  if (!candidate.is_lq()) throw StructuralError("admit_lq: " + candidate.id + " is not an LQ");
  // A rejected queue may re-submit later; an active member may not.
  if (is_member(candidate.id)) {
    throw StructuralError("admit_lq: duplicate queue id " + candidate.id);
  }
  seen_ids_.insert(candidate.id);
  if (!check_safety(candidate)) {
    rejected_.insert(candidate.id);
    return QueueClass::Rejected;
  }
  rejected_.erase(candidate.id);

  // One cache-friendly pass: the fairness comparison, the ratio cached for
  // the safety condition, and the peak rate for the empty-timeline resource
  // shortcut all come from the same scan.
  const double fairness_limit = 1.0 / admission_denominator() + kCompareSlack;
  const size_t dims = cluster_.dims();
  bool fair = true;
  double ratio = 0.0;
  double rate_ratio = 0.0;
  const size_t n_bursts = candidate.bursts.size();
  const BurstSpec* bursts = candidate.bursts.data();
  const double* inv_cap = inv_capacity_.data();
  for (size_t n = 0; n < n_bursts && fair; ++n) {
    const BurstSpec& b = bursts[n];
    double interval = (n + 1 < n_bursts) ? bursts[n + 1].arrival_time - b.arrival_time
                                         : b.deadline_window;
    if (interval <= 0.0) {
      throw SpecError("queue " + candidate.id + ": nonpositive interval for burst " +
                      std::to_string(n));
    }
    const double* d = b.demand.values().data();
    // Both conditions share the burst's peak demand-to-capacity fraction;
    // divisions happen only when a running max actually moves.
    double per_cap = d[0] * inv_cap[0];
    for (size_t k = 1; k < dims; ++k) per_cap = std::max(per_cap, d[k] * inv_cap[k]);
    if (per_cap > ratio * interval) ratio = per_cap / interval;
    if (per_cap > rate_ratio * b.deadline_window) rate_ratio = per_cap / b.deadline_window;
    fair = ratio <= fairness_limit;
  }
  if (!fair) {
    elastic_.insert(candidate.id);
    return QueueClass::Elastic;
  }

  bool resource_ok = committed_.empty() ? rate_ratio <= 1.0 + kCompareSlack
                                        : check_resource(candidate);
  if (resource_ok) {
    std::vector<double> windows;
    for (const auto& b : candidate.bursts) {
      if (b.demand.is_zero(0.0)) continue;  // zero rate commits nothing
      ResourceVector rate = b.demand / b.deadline_window;
      committed_.add(b.arrival_time, b.deadline(), rate);
      windows.push_back(b.arrival_time);
      windows.push_back(b.deadline());
      for (size_t k = 0; k < dims; ++k) windows.push_back(rate[k]);
    }
    committed_windows_.emplace(candidate.id, std::move(windows));
    hard_.insert(candidate.id);
  } else if (soft_guarantee_enabled) {
    soft_.insert(candidate.id);
  } else {
    elastic_.insert(candidate.id);
    return QueueClass::Elastic;
  }
  guarantee_ratios_[candidate.id] = ratio;
  max_ratio_ = std::max(max_ratio_, ratio);
  return resource_ok ? QueueClass::Hard : QueueClass::Soft;
}

QueueClass AdmissionState::admit_tq(const QueueSpec& candidate) {
  if (candidate.is_lq()) throw StructuralError("admit_tq: " + candidate.id + " is not a TQ");
  if (is_member(candidate.id)) {
    throw StructuralError("admit_tq: duplicate queue id " + candidate.id);
  }
  seen_ids_.insert(candidate.id);
  if (!check_safety(candidate)) {
    rejected_.insert(candidate.id);
    return QueueClass::Rejected;
  }
  rejected_.erase(candidate.id);
  elastic_.insert(candidate.id);
  return QueueClass::Elastic;
}

void AdmissionState::remove_queue(const std::string& id) {
  if (hard_.erase(id)) {
    const size_t dims = cluster_.dims();
    const auto& flat = committed_windows_.at(id);
    for (size_t i = 0; i + 1 + dims <= flat.size(); i += 2 + dims) {
      ResourceVector rate(dims);
      for (size_t k = 0; k < dims; ++k) rate[k] = flat[i + 2 + k];
      committed_.subtract(flat[i], flat[i + 1], rate);
    }
  }
  soft_.erase(id);
  elastic_.erase(id);
  committed_windows_.erase(id);
  seen_ids_.erase(id);
  if (guarantee_ratios_.erase(id)) refresh_max_ratio();
}

void AdmissionState::refresh_max_ratio() {
  max_ratio_ = 0.0;
  for (const auto& [id, r] : guarantee_ratios_) max_ratio_ = std::max(max_ratio_, r);
}

void AdmissionState::reserve(size_t expected_queues) {
  seen_ids_.reserve(expected_queues);
  hard_.reserve(expected_queues);
  soft_.reserve(expected_queues);
  elastic_.reserve(expected_queues);
  rejected_.reserve(expected_queues);
  guarantee_ratios_.reserve(expected_queues);
  committed_windows_.reserve(expected_queues);
}

bool AdmissionState::recheck_guarantees() const {
  int denom = std::max(static_cast<int>(admitted_count()), cluster_.n_min);
  if (denom == 0) return true;
  return max_ratio_ <= 1.0 / denom + kCompareSlack;
}

}  // namespace bopf
