#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bopf/engine.hpp"

namespace bopf {

// Mean over completed jobs of (completion - arrival). The filter selects
// queues by id; jobs truncated by the horizon never produce JobComplete
// events and are excluded.
double avg_completion(const EventLog& log,
                      const std::function<bool(const std::string&)>& queue_filter);

// Convenience filters over queue kind (an LQ is any queue with burst arrivals).
double avg_completion_lq(const EventLog& log);
double avg_completion_tq(const EventLog& log);

// avg_completion(baseline) / avg_completion(candidate) over the filtered jobs.
double factor_of_improvement(const EventLog& baseline, const EventLog& candidate,
                             const std::function<bool(const std::string&)>& queue_filter);

struct FairnessMargin {
  std::string lq;
  std::string tq;
  double margin;  // TQ average dominant share minus LQ average dominant share
};

// Long-term fairness over [t0, t1]: per-queue average allocation from the
// piecewise-constant snapshots (exact), reduced to the dominant share of the
// average. Margins >= 0 mean every TQ kept up with every LQ.
std::vector<FairnessMargin> fairness_check(const EventLog& log, double t0, double t1);

struct MembershipSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<std::string> lqs;
  std::vector<std::string> tqs;
};

// Windows of constant queue membership, split at every admission and exit.
std::vector<MembershipSegment> membership_segments(const EventLog& log);

// Fraction of an LQ's arrived bursts that completed by their deadline; bursts
// still incomplete at the end of the log count as misses.
double deadline_fraction(const EventLog& log, const std::string& lq_id);

// Fraction of capacity used per resource over the run.
ResourceVector utilization(const EventLog& log);

struct BurstSummary {
  int index = 0;
  double arrival = 0.0;
  double deadline = 0.0;
  std::optional<double> completion;
  bool hit = false;
};

struct QueueSummary {
  bool is_lq = false;
  std::string admission_class;
  int jobs_completed = 0;
  double avg_job_completion = 0.0;
  double deadline_fraction = 0.0;
  std::vector<BurstSummary> bursts;
};

struct RunSummary {
  std::string policy;
  std::string mode;
  bool truncated = false;
  double makespan = 0.0;
  std::map<std::string, QueueSummary> queues;
  std::vector<ResourceVector> per_resource_utilization;  // single entry
  struct Segment {
    double t0, t1;
    double min_margin;  // min over (LQ, TQ) pairs; +inf when no pairs
  };
  std::vector<Segment> fairness_segments;

  std::string to_json() const;  // stable field order
};

RunSummary summarize(const EventLog& log);

}  // namespace bopf
