#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bopf/spec_types.hpp"
#include "bopf/timeline.hpp"

namespace bopf {

enum class QueueClass { Rejected = 0, Elastic = 1, Soft = 2, Hard = 3 };

const char* queue_class_name(QueueClass c);

// Classification state: the Hard/Soft/Elastic member sets plus the
// committed-rate timeline backing the resource condition. Single-writer; the
// engine mutates it only at scheduling epochs.
class AdmissionState {
 public:
  explicit AdmissionState(ClusterConfig cluster);

  const ClusterConfig& cluster() const { return cluster_; }
  const std::unordered_set<std::string>& hard() const { return hard_; }
  const std::unordered_set<std::string>& soft() const { return soft_; }
  const std::unordered_set<std::string>& elastic() const { return elastic_; }
  const std::unordered_set<std::string>& rejected() const { return rejected_; }
  const RateTimeline& committed() const { return committed_; }

  size_t admitted_count() const { return hard_.size() + soft_.size() + elastic_.size(); }
  // Denominator a new candidate faces: max(|H|+|S|+|E|+1, n_min).
  int admission_denominator() const;

  // Ever seen (active or rejected).
  bool contains(const std::string& id) const;
  // Currently in one of the admitted classes.
  bool is_member(const std::string& id) const;
  QueueClass class_of(const std::string& id) const;

  // Long-term fair-share bound for burst n of an LQ candidate, in
  // resource*seconds: C * interval(n) / admission_denominator().
  ResourceVector fair_share_bound(const QueueSpec& spec, size_t burst_index) const;

  // Condition checks, evaluated as if the candidate were admitted (the
  // denominator counts it). Safety re-validates every guaranteed queue's
  // bursts; fairness and resource look at the candidate itself.
  bool check_safety(const QueueSpec& candidate) const;
  bool check_fairness(const QueueSpec& candidate) const;
  bool check_resource(const QueueSpec& candidate) const;

  // LQAdmit: !safety -> Rejected; safety && !fairness -> Elastic;
  // all three -> Hard (committing d/t over each burst window);
  // safety && fairness && !resource -> Soft, or Elastic when
  // soft_guarantee_enabled is false (the naive variant).
  // Rejected and exited queues may re-submit; active members may not.
  QueueClass admit_lq(const QueueSpec& candidate, bool soft_guarantee_enabled = true);
  // TQAdmit: safety -> Elastic, else Rejected.
  QueueClass admit_tq(const QueueSpec& candidate);

  // Queue exit: removes it from its class and releases hard commitments.
  // Later admissions see the smaller denominator. No-op for unknown ids.
  void remove_queue(const std::string& id);

  // True iff the safety condition still holds for every member of H u S
  // under the current (not incremented) denominator.
  bool recheck_guarantees() const;

  // Capacity hint for workloads with a known queue population.
  void reserve(size_t expected_queues);

 private:
  double guarantee_ratio(const QueueSpec& spec) const;
  void refresh_max_ratio();

  ClusterConfig cluster_;
  std::unordered_set<std::string> hard_, soft_, elastic_, rejected_;
  RateTimeline committed_;
  // Per hard queue, the committed windows as flat (begin, end, rate...) rows
  // so exits can release them without retaining whole specs.
  std::unordered_map<std::string, std::vector<double>> committed_windows_;
  // Per guaranteed queue: max over bursts/resources of d_k(n) / (C_k * interval(n)).
  // The safety condition for denominator N is exactly max_ratio_ <= 1/N,
  // which keeps admissions O(1) after the candidate's own scan.
  std::unordered_map<std::string, double> guarantee_ratios_;
  double max_ratio_ = 0.0;
  std::vector<double> inv_capacity_;
  std::unordered_set<std::string> seen_ids_;
};

}  // namespace bopf
