#include "bopf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bopf/errors.hpp"

namespace bopf {

namespace {

std::set<std::string> lq_ids(const EventLog& log) {
  std::set<std::string> out;
  for (const auto& e : log.events) {
    if (e.kind == EventKind::BurstArrival) out.insert(e.queue);
  }
  return out;
}

// Zero-demand bursts are interval markers, not workload; their bookkeeping
// jobs must not contaminate completion or deadline statistics.
std::set<std::pair<std::string, int>> marker_bursts(const EventLog& log) {
  std::set<std::pair<std::string, int>> out;
  for (const auto& e : log.events) {
    if (e.kind == EventKind::BurstArrival && e.vec.is_zero()) out.insert({e.queue, e.burst});
  }
  return out;
}

double run_end_time(const EventLog& log) {
  for (auto it = log.events.rbegin(); it != log.events.rend(); ++it) {
    if (it->kind == EventKind::RunEnd) return it->t;
  }
  return log.events.empty() ? 0.0 : log.events.back().t;
}

}  // namespace

double avg_completion(const EventLog& log,
                      const std::function<bool(const std::string&)>& queue_filter) {
  auto markers = marker_bursts(log);
  double sum = 0.0;
  int n = 0;
  for (const auto& e : log.events) {
    if (e.kind != EventKind::JobComplete) continue;
    if (queue_filter && !queue_filter(e.queue)) continue;
    if (e.burst >= 0 && markers.count({e.queue, e.burst})) continue;
    sum += e.t - e.value;  // value carries the job arrival
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

double avg_completion_lq(const EventLog& log) {
  auto lqs = lq_ids(log);
  return avg_completion(log, [&](const std::string& q) { return lqs.count(q) > 0; });
}

double avg_completion_tq(const EventLog& log) {
  auto lqs = lq_ids(log);
  return avg_completion(log, [&](const std::string& q) { return lqs.count(q) == 0; });
}

double factor_of_improvement(const EventLog& baseline, const EventLog& candidate,
                             const std::function<bool(const std::string&)>& queue_filter) {
  double cand = avg_completion(candidate, queue_filter);
  if (cand <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return avg_completion(baseline, queue_filter) / cand;
}

std::vector<MembershipSegment> membership_segments(const EventLog& log) {
  auto lqs = lq_ids(log);
  // Membership change points: admissions and exits.
  std::vector<std::pair<double, std::pair<std::string, bool>>> changes;  // (t, (id, joined))
  for (const auto& e : log.events) {
    if (e.kind != EventKind::AdmissionDecision) continue;
    if (e.info == "exit") {
      changes.push_back({e.t, {e.queue, false}});
    } else if (e.info != "rejected") {
      changes.push_back({e.t, {e.queue, true}});
    }
  }
  double end = run_end_time(log);
  std::vector<MembershipSegment> segments;
  std::set<std::string> members;
  size_t i = 0;
  while (i < changes.size()) {
    double t = changes[i].first;
    while (i < changes.size() && changes[i].first == t) {
      if (changes[i].second.second) {
        members.insert(changes[i].second.first);
      } else {
        members.erase(changes[i].second.first);
      }
      ++i;
    }
    double t1 = (i < changes.size()) ? changes[i].first : end;
    if (t1 > t && !members.empty()) {
      MembershipSegment seg;
      seg.t0 = t;
      seg.t1 = t1;
      for (const auto& id : members) {
        (lqs.count(id) ? seg.lqs : seg.tqs).push_back(id);
      }
      segments.push_back(std::move(seg));
    }
  }
  return segments;
}

std::vector<FairnessMargin> fairness_check(const EventLog& log, double t0, double t1) {
  if (!(t1 > t0)) throw StructuralError("fairness_check: empty window");
  auto lqs = lq_ids(log);
  auto frames = expand_snapshots(log);
  const size_t dims = log.capacity.size();

  // Queues that are members during the window (admitted at or before t0 and
  // not gone before it); idle members integrate to zero.
  std::map<std::string, ResourceVector> integral;
  for (const auto& e : log.events) {
    if (e.kind != EventKind::AdmissionDecision) continue;
    if (e.info == "exit" || e.info == "rejected") {
      if (e.t <= t0 + kCompareSlack) integral.erase(e.queue);
    } else if (e.t <= t0 + kCompareSlack) {
      integral.emplace(e.queue, ResourceVector(dims));
    }
  }

  for (size_t i = 0; i < frames.size(); ++i) {
    double a = frames[i].t;
    double b = (i + 1 < frames.size()) ? frames[i + 1].t : std::max(t1, a);
    double lo = std::max(a, t0), hi = std::min(b, t1);
    if (hi <= lo) continue;
    for (const auto& [id, row] : frames[i].rows) {
      auto it = integral.find(id);
      if (it == integral.end()) it = integral.emplace(id, ResourceVector(dims)).first;
      it->second += row.usage * (hi - lo);
    }
  }

  double T = t1 - t0;
  std::map<std::string, double> dom;
  for (const auto& [id, v] : integral) dom[id] = dominant_share(v / T, log.capacity);

  std::vector<FairnessMargin> out;
  for (const auto& [lq, lv] : dom) {
    if (!lqs.count(lq)) continue;
    for (const auto& [tq, tv] : dom) {
      if (lqs.count(tq)) continue;
      out.push_back({lq, tq, tv - lv});
    }
  }
  return out;
}

double deadline_fraction(const EventLog& log, const std::string& lq_id) {
  auto markers = marker_bursts(log);
  int arrived = 0, hits = 0;
  for (const auto& e : log.events) {
    if (e.queue != lq_id) continue;
    if (markers.count({e.queue, e.burst})) continue;
    if (e.kind == EventKind::BurstArrival) ++arrived;
    if (e.kind == EventKind::BurstComplete && e.flag) ++hits;
  }
  return arrived == 0 ? 0.0 : static_cast<double>(hits) / arrived;
}

ResourceVector utilization(const EventLog& log) {
  const size_t dims = log.capacity.size();
  auto frames = expand_snapshots(log);
  double end = run_end_time(log);
  ResourceVector integral(dims);
  for (size_t i = 0; i < frames.size(); ++i) {
    double a = frames[i].t;
    double b = (i + 1 < frames.size()) ? frames[i + 1].t : end;
    if (b <= a) continue;
    for (const auto& [id, row] : frames[i].rows) integral += row.usage * (b - a);
  }
  ResourceVector out(dims);
  if (end > 0.0) {
    for (size_t k = 0; k < dims; ++k) out[k] = integral[k] / (log.capacity[k] * end);
  }
  return out;
}

RunSummary summarize(const EventLog& log) {
  RunSummary s;
  s.policy = log.policy;
  s.mode = log.mode == SimMode::Task ? "task" : "fluid";
  s.truncated = log.truncated;
  s.makespan = run_end_time(log);
  auto lqs = lq_ids(log);

  auto markers = marker_bursts(log);
  std::map<std::string, double> sum;
  std::map<std::string, int> count;
  for (const auto& e : log.events) {
    switch (e.kind) {
      case EventKind::AdmissionDecision: {
        auto& q = s.queues[e.queue];
        if (e.info != "exit") q.admission_class = e.info;
        break;
      }
      case EventKind::BurstArrival: {
        auto& q = s.queues[e.queue];
        q.is_lq = true;
        if (markers.count({e.queue, e.burst})) break;
        BurstSummary b;
        b.index = e.burst;
        b.arrival = e.t;
        b.deadline = e.value;
        if (static_cast<int>(q.bursts.size()) <= e.burst) q.bursts.resize(e.burst + 1);
        q.bursts[e.burst] = b;
        break;
      }
      case EventKind::BurstComplete: {
        auto& q = s.queues[e.queue];
        if (markers.count({e.queue, e.burst})) break;
        if (static_cast<int>(q.bursts.size()) > e.burst) {
          q.bursts[e.burst].completion = e.t;
          q.bursts[e.burst].hit = e.flag;
        }
        break;
      }
      case EventKind::JobComplete: {
        if (e.burst >= 0 && markers.count({e.queue, e.burst})) break;
        sum[e.queue] += e.t - e.value;
        count[e.queue] += 1;
        break;
      }
      default: break;
    }
  }
  for (auto& [id, q] : s.queues) {
    q.is_lq = lqs.count(id) > 0;
    q.jobs_completed = count.count(id) ? count[id] : 0;
    q.avg_job_completion = q.jobs_completed ? sum[id] / q.jobs_completed : 0.0;
    if (q.is_lq) q.deadline_fraction = deadline_fraction(log, id);
  }
  s.per_resource_utilization.push_back(utilization(log));
  for (const auto& seg : membership_segments(log)) {
    double min_margin = std::numeric_limits<double>::infinity();
    if (!seg.lqs.empty() && !seg.tqs.empty()) {
      for (const auto& m : fairness_check(log, seg.t0, seg.t1)) {
        min_margin = std::min(min_margin, m.margin);
      }
    }
    s.fairness_segments.push_back({seg.t0, seg.t1, min_margin});
  }
  return s;
}

std::string RunSummary::to_json() const {
  nlohmann::ordered_json j;
  j["policy"] = policy;
  j["mode"] = mode;
  j["truncated"] = truncated;
  j["makespan"] = makespan;
  nlohmann::ordered_json qs;
  for (const auto& [id, q] : queues) {
    nlohmann::ordered_json qq;
    qq["kind"] = q.is_lq ? "lq" : "tq";
    if (!q.admission_class.empty()) qq["class"] = q.admission_class;
    qq["jobs_completed"] = q.jobs_completed;
    qq["avg_job_completion"] = q.avg_job_completion;
    if (q.is_lq) {
      qq["deadline_fraction"] = q.deadline_fraction;
      nlohmann::ordered_json bs = nlohmann::ordered_json::array();
      for (const auto& b : q.bursts) {
        nlohmann::ordered_json bb;
        bb["burst"] = b.index;
        bb["arrival"] = b.arrival;
        bb["deadline"] = b.deadline;
        if (b.completion) {
          bb["completion"] = *b.completion;
          bb["hit"] = b.hit;
        }
        bs.push_back(std::move(bb));
      }
      qq["bursts"] = std::move(bs);
    }
    qs[id] = std::move(qq);
  }
  j["queues"] = std::move(qs);
  if (!per_resource_utilization.empty()) {
    j["utilization"] = per_resource_utilization.front().values();
  }
  nlohmann::ordered_json segs = nlohmann::ordered_json::array();
  for (const auto& seg : fairness_segments) {
    nlohmann::ordered_json ss;
    ss["t0"] = seg.t0;
    ss["t1"] = seg.t1;
    if (std::isfinite(seg.min_margin)) ss["min_margin"] = seg.min_margin;
    segs.push_back(std::move(ss));
  }
  j["fairness_segments"] = std::move(segs);
  return j.dump(2);
}

}  // namespace bopf
