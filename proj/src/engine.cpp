#include "bopf/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <set>

#include <json.hpp>

#include "bopf/errors.hpp"

namespace bopf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeEps = 1e-9;
}  // namespace

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::RunStart: return "RunStart";
    case EventKind::BurstArrival: return "BurstArrival";
    case EventKind::AdmissionDecision: return "AdmissionDecision";
    case EventKind::AllocationSnapshot: return "AllocationSnapshot";
    case EventKind::TaskStart: return "TaskStart";
    case EventKind::TaskFinish: return "TaskFinish";
    case EventKind::JobComplete: return "JobComplete";
    case EventKind::BurstComplete: return "BurstComplete";
    case EventKind::RunEnd: return "RunEnd";
  }
  return "?";
}

double RunSpec::effective_horizon() const {
  if (horizon > 0.0) return horizon;
  double last = 0.0;
  for (const auto& q : queues) last = std::max(last, q.last_arrival());
  return std::max(10.0 * last, 1000.0 * cluster.tick_seconds);
}

void RunSpec::validate() const {
  cluster.validate();
  std::set<std::string> ids;
  for (const auto& q : queues) {
    if (!ids.insert(q.id).second) throw StructuralError("duplicate queue id " + q.id);
    q.validate(cluster.dims());
    auto check_jobs = [&](const std::vector<JobSpec>& jobs) {
      for (const auto& j : jobs) {
        for (const auto& s : j.stages) {
          if (!s.task_demand.leq(cluster.capacity)) {
            throw SpecError("queue " + q.id + " job " + j.id + ": task demand exceeds capacity");
          }
        }
      }
    };
    for (const auto& b : q.bursts) {
      if (mode == SimMode::Task && b.jobs.empty()) {
        throw SpecError("queue " + q.id + ": task mode requires burst jobs");
      }
      check_jobs(b.jobs);
    }
    check_jobs(q.jobs);
  }
}

namespace {

struct StageRun {
  int unstarted = 0;
  int unfinished = 0;
  std::vector<int> preds;
};

struct JobRun {
  const JobSpec* spec = nullptr;
  std::string uid;
  double arrival = 0.0;
  int burst = -1;
  std::vector<StageRun> stages;  // task mode
  int unfinished_tasks = 0;
  ResourceVector remaining;      // fluid mode: outstanding work
  ResourceVector rate_cap;       // fluid mode: all remaining tasks concurrent
  ResourceVector rate;           // fluid mode: current consumption rate
  bool complete = false;
};

struct BurstRun {
  const BurstSpec* spec = nullptr;
  int index = 0;
  bool arrived = false;
  bool complete = false;
  int incomplete_jobs = 0;
  ResourceVector consumed;  // integrated allocation to this burst's jobs
  ResourceVector running;   // task mode: rate currently held by burst jobs
};

struct QueueRun {
  const QueueSpec* spec = nullptr;
  QueueClass cls = QueueClass::Elastic;
  bool admitted = false;
  bool exited = false;
  double submit_time = 0.0;
  std::vector<JobRun> jobs;  // FIFO by (arrival, insertion order)
  std::vector<BurstRun> bursts;
  int incomplete_jobs = 0;
  ResourceVector usage;  // task: held by running tasks; fluid: consumption rate
  double mbvt_warp_override = -1.0;
  size_t first_incomplete = 0;       // leading fully-complete jobs to skip
  std::vector<size_t> active_rates;  // fluid: jobs holding a nonzero rate
  std::vector<size_t> zero_work;     // fluid: zero-demand jobs (burst markers)
};

struct RunningTask {
  double finish;
  std::string queue;
  int job_index;
  int stage;
  int task;
  ResourceVector demand;
  bool operator>(const RunningTask& o) const {
    if (finish != o.finish) return finish > o.finish;
    if (queue != o.queue) return queue > o.queue;
    if (job_index != o.job_index) return job_index > o.job_index;
    if (stage != o.stage) return stage > o.stage;
    return task > o.task;
  }
};

class Engine {
 public:
  explicit Engine(const RunSpec& spec)
      : spec_(spec),
        dims_(spec.cluster.dims()),
        admission_(spec.cluster),
        horizon_(spec.effective_horizon()) {}

  EventLog run();

 private:
  bool is_bopf_family() const {
    return spec_.policy == Policy::Bopf || spec_.policy == Policy::Nbopf;
  }

  void emit(SimEvent e) { log_.events.push_back(std::move(e)); }

  void build_queues();
  void process_arrivals(double now);
  ShareLevels allocate(double now);
  void snapshot(double now, const ShareLevels& shares);
  void process_finishes_task(double now);
  void start_tasks(double now, const ShareLevels& shares);
  std::vector<std::pair<std::string, int>> fluid_detect_completions(double now);
  void fluid_assign_rates(double now, const ShareLevels& shares);
  void finalize_job(double now, const std::string& qid, JobRun& job);
  void maybe_exit_queue(double now, const std::string& qid);
  void integrate(double now, double until);
  void advance_mbvt(double dt);
  double next_epoch_after(double now) const;
  bool work_pending() const;
  bool stage_runnable(const JobRun& job, int stage) const;
  ResourceVector queue_demand(const QueueRun& q, double now) const;
  const BurstRun* active_burst(const QueueRun& q, double now) const;
  double mbvt_warp(const QueueRun& q, const BurstSpec& b) const;

  const RunSpec& spec_;
  size_t dims_;
  AdmissionState admission_;
  double horizon_;
  EventLog log_;
  std::map<std::string, QueueRun> queues_;
  std::priority_queue<RunningTask, std::vector<RunningTask>, std::greater<>> running_;
  ResourceVector used_;
  MbvtState mbvt_;
  std::map<std::string, SnapshotRow> last_rows_;
  std::map<std::string, ResourceVector> current_demands_;
};

double Engine::mbvt_warp(const QueueRun& q, const BurstSpec& b) const {
  return q.mbvt_warp_override >= 0.0 ? q.mbvt_warp_override : b.deadline_window;
}

void Engine::build_queues() {
  for (const auto& qs : spec_.queues) {
    QueueRun q;
    q.spec = &qs;
    q.submit_time = qs.is_lq() ? qs.bursts.front().arrival_time : 0.0;
    auto warp = spec_.mbvt_warps.find(qs.id);
    if (warp != spec_.mbvt_warps.end()) q.mbvt_warp_override = warp->second;
    q.usage = ResourceVector(dims_);

    auto add_job = [&](const JobSpec* js, double arrival, int burst, const std::string& uid,
                       const ResourceVector& work, const ResourceVector& cap) {
      JobRun jr;
      jr.spec = js;
      jr.uid = uid;
      jr.arrival = arrival;
      jr.burst = burst;
      jr.remaining = work;
      jr.rate_cap = cap;
      if (js != nullptr) {
        jr.stages.resize(js->stages.size());
        for (size_t s = 0; s < js->stages.size(); ++s) {
          jr.stages[s].unstarted = js->stages[s].task_count;
          jr.stages[s].unfinished = js->stages[s].task_count;
          jr.unfinished_tasks += js->stages[s].task_count;
        }
        for (auto [from, to] : js->stage_dependencies) jr.stages[to].preds.push_back(from);
      }
      q.jobs.push_back(std::move(jr));
    };

    if (qs.is_lq()) {
      for (size_t n = 0; n < qs.bursts.size(); ++n) {
        const BurstSpec& b = qs.bursts[n];
        BurstRun br;
        br.spec = &b;
        br.index = static_cast<int>(n);
        br.consumed = ResourceVector(dims_);
        br.running = ResourceVector(dims_);
        if (b.jobs.empty()) {
          // Pure fluid burst: the declared demand is the work itself.
          add_job(nullptr, b.arrival_time, br.index, qs.id + "/b" + std::to_string(n), b.demand,
                  spec_.cluster.capacity);
          br.incomplete_jobs = 1;
        } else {
          for (const auto& js : b.jobs) {
            add_job(&js, b.arrival_time, br.index,
                    qs.id + "/b" + std::to_string(n) + "/" + js.id, js.total_demand(dims_),
                    js.parallel_rate(dims_));
            br.incomplete_jobs++;
          }
        }
        q.bursts.push_back(std::move(br));
      }
    } else {
      for (const auto& js : qs.jobs) {
        add_job(&js, 0.0, -1, qs.id + "/" + js.id, js.total_demand(dims_), js.parallel_rate(dims_));
      }
    }
    q.incomplete_jobs = static_cast<int>(q.jobs.size());
    for (size_t ji = 0; ji < q.jobs.size(); ++ji) {
      if (dominant_share(q.jobs[ji].remaining, spec_.cluster.capacity) <= kCompareSlack) {
        q.zero_work.push_back(ji);
      }
    }
    queues_.emplace(qs.id, std::move(q));
  }
}

void Engine::process_arrivals(double now) {
  // Queue submissions: new LQs are classified before new TQs, each group in
  // id order; an LQ submits at its first burst arrival, TQs at time 0.
  for (int pass = 0; pass < 2; ++pass) {
    for (auto& [id, q] : queues_) {
      bool is_lq = q.spec->is_lq();
      if ((pass == 0) != is_lq) continue;
      if (q.admitted || q.cls == QueueClass::Rejected) continue;
      if (q.submit_time > now + kTimeEps) continue;
      int denominator = admission_.admission_denominator();
      QueueClass cls = QueueClass::Elastic;
      if (is_bopf_family()) {
        cls = is_lq ? admission_.admit_lq(*q.spec, spec_.policy == Policy::Bopf)
                    : admission_.admit_tq(*q.spec);
      }
      q.cls = cls;
      q.admitted = cls != QueueClass::Rejected;
      SimEvent e;
      e.t = now;
      e.kind = EventKind::AdmissionDecision;
      e.queue = id;
      e.info = is_bopf_family() ? queue_class_name(cls) : "admitted";
      e.value = is_bopf_family() ? denominator : 0;
      emit(std::move(e));
      if (q.admitted && !is_lq) {
        double warp = q.mbvt_warp_override >= 0.0 ? q.mbvt_warp_override : 0.0;
        mbvt_.queues[id] = MbvtQueueState{warp, now - warp, true};
      }
    }
  }
  for (auto& [id, q] : queues_) {
    if (!q.spec->is_lq() || !q.admitted || q.exited) continue;
    for (auto& b : q.bursts) {
      if (!b.arrived && b.spec->arrival_time <= now + kTimeEps) {
        b.arrived = true;
        SimEvent e;
        e.t = now;
        e.kind = EventKind::BurstArrival;
        e.queue = id;
        e.burst = b.index;
        e.value = b.spec->deadline();
        e.vec = b.spec->demand;
        emit(std::move(e));
        double warp = mbvt_warp(q, *b.spec);
        mbvt_.queues[id] = MbvtQueueState{warp, b.spec->arrival_time - warp, true};
      }
    }
  }
}

bool Engine::stage_runnable(const JobRun& job, int stage) const {
  for (int p : job.stages[stage].preds) {
    if (job.stages[p].unfinished > 0) return false;
  }
  return true;
}

ResourceVector Engine::queue_demand(const QueueRun& q, double now) const {
  // Demand beyond ~1.2x capacity cannot change any allocation, so the FIFO
  // scan stops once that much is accumulated; deep backlogs stay O(1).
  const double enough = 1.2;
  if (spec_.mode == SimMode::Task) {
    ResourceVector d = q.usage;
    for (size_t ji = q.first_incomplete; ji < q.jobs.size(); ++ji) {
      const JobRun& job = q.jobs[ji];
      if (dominant_share(d, spec_.cluster.capacity) >= enough) break;
      if (job.complete) continue;
      if (job.arrival > now + kTimeEps) break;  // jobs are arrival-ordered
      for (size_t s = 0; s < job.stages.size(); ++s) {
        const auto& st = job.stages[s];
        if (st.unstarted > 0 && stage_runnable(job, static_cast<int>(s))) {
          d += job.spec->stages[s].task_demand * static_cast<double>(st.unstarted);
        }
      }
    }
    return d;
  }
  ResourceVector d(dims_);
  for (size_t ji = q.first_incomplete; ji < q.jobs.size(); ++ji) {
    const JobRun& job = q.jobs[ji];
    if (dominant_share(d, spec_.cluster.capacity) >= enough) break;
    if (job.complete) continue;
    if (job.arrival > now + kTimeEps) break;
    // Max rate along the remaining-work direction with every remaining task
    // running concurrently.
    double lam = kInf;
    for (size_t k = 0; k < dims_; ++k) {
      if (job.remaining[k] > 1e-12) lam = std::min(lam, job.rate_cap[k] / job.remaining[k]);
    }
    if (lam == kInf) lam = 0.0;
    d += job.remaining * lam;
  }
  return d;
}

const BurstRun* Engine::active_burst(const QueueRun& q, double now) const {
  for (const auto& b : q.bursts) {
    if (b.arrived && !b.complete && now < b.spec->deadline() - kTimeEps) return &b;
  }
  return nullptr;
}

ShareLevels Engine::allocate(double now) {
  current_demands_.clear();
  for (auto& [id, q] : queues_) {
    if (q.admitted && !q.exited) current_demands_[id] = queue_demand(q, now);
  }
  const auto& C = spec_.cluster.capacity;
  ShareLevels levels;
  switch (spec_.policy) {
    case Policy::Drf: {
      std::vector<QueueDemand> all;
      for (const auto& [id, d] : current_demands_) all.push_back({id, d});
      levels = drf_fill(all, C);
      break;
    }
    case Policy::Sp: {
      std::vector<QueueDemand> lqs, tqs;
      for (const auto& [id, d] : current_demands_) {
        (queues_.at(id).spec->is_lq() ? lqs : tqs).push_back({id, d});
      }
      levels = strict_priority(lqs, tqs, C, spec_.alloc);
      break;
    }
    case Policy::Mbvt: {
      std::vector<QueueDemand> all;
      for (const auto& [id, d] : current_demands_) all.push_back({id, d});
      levels = mbvt_allocate(mbvt_, all, C, spec_.alloc);
      break;
    }
    case Policy::Bopf:
    case Policy::Nbopf: {
      std::vector<HardEntry> hard;
      std::vector<SoftEntry> soft;
      std::vector<QueueDemand> elastic;
      for (const auto& [id, d] : current_demands_) {
        const QueueRun& q = queues_.at(id);
        const BurstRun* b = active_burst(q, now);
        if (q.cls == QueueClass::Hard && b != nullptr) {
          hard.push_back({id, b->spec->demand / b->spec->deadline_window, d});
          continue;
        }
        if (q.cls == QueueClass::Soft && b != nullptr) {
          ResourceVector owed = b->spec->demand.saturating_sub(b->consumed);
          double rem = dominant_share(owed, C);
          if (rem > kCompareSlack) {
            soft.push_back({id, d, rem, b->spec->deadline()});
            continue;
          }
        }
        elastic.push_back({id, d});
      }
      levels = bopf_allocate(hard, soft, elastic, C, spec_.alloc);
      break;
    }
  }
  levels.epoch = now;
  levels.policy = policy_name(spec_.policy);
  return levels;
}

void Engine::snapshot(double now, const ShareLevels& shares) {
  SimEvent e;
  e.t = now;
  e.kind = EventKind::AllocationSnapshot;
  e.info = policy_name(spec_.policy);
  std::map<std::string, SnapshotRow> rows;
  for (const auto& [id, q] : queues_) {
    if (!q.admitted || q.exited) continue;
    SnapshotRow row;
    auto s = shares.share.find(id);
    row.share = (s != shares.share.end()) ? s->second : ResourceVector(dims_);
    row.usage = q.usage;
    auto d = current_demands_.find(id);
    row.demand = (d != current_demands_.end()) ? d->second : ResourceVector(dims_);
    rows.emplace(id, std::move(row));
  }
  for (const auto& [id, row] : rows) {
    auto it = last_rows_.find(id);
    if (it == last_rows_.end() || !(it->second == row)) {
      e.rows.emplace(id, row);
      last_rows_[id] = row;
    }
  }
  for (auto it = last_rows_.begin(); it != last_rows_.end();) {
    if (!rows.count(it->first)) {
      SnapshotRow zero{ResourceVector(dims_), ResourceVector(dims_), ResourceVector(dims_)};
      if (!(it->second == zero)) e.rows.emplace(it->first, zero);
      it = last_rows_.erase(it);
    } else {
      ++it;
    }
  }
  if (!e.rows.empty()) emit(std::move(e));
}

void Engine::finalize_job(double now, const std::string& qid, JobRun& job) {
  QueueRun& q = queues_.at(qid);
  q.incomplete_jobs--;
  while (q.first_incomplete < q.jobs.size() && q.jobs[q.first_incomplete].complete) {
    q.first_incomplete++;
  }
  SimEvent e;
  e.t = now;
  e.kind = EventKind::JobComplete;
  e.queue = qid;
  e.job = job.uid;
  e.burst = job.burst;
  e.value = job.arrival;
  emit(std::move(e));
  if (job.burst >= 0) {
    BurstRun& b = q.bursts[job.burst];
    if (--b.incomplete_jobs == 0 && !b.complete) {
      b.complete = true;
      SimEvent be;
      be.t = now;
      be.kind = EventKind::BurstComplete;
      be.queue = qid;
      be.burst = b.index;
      be.value = b.spec->deadline();
      be.flag = now <= b.spec->deadline() + kCompareSlack;
      emit(std::move(be));
    }
  }
  maybe_exit_queue(now, qid);
}

void Engine::maybe_exit_queue(double now, const std::string& qid) {
  QueueRun& q = queues_.at(qid);
  if (q.exited || !q.admitted || q.incomplete_jobs > 0) return;
  q.exited = true;
  if (is_bopf_family()) admission_.remove_queue(qid);
  mbvt_.queues.erase(qid);
  SimEvent e;
  e.t = now;
  e.kind = EventKind::AdmissionDecision;
  e.queue = qid;
  e.info = "exit";
  emit(std::move(e));
}

void Engine::process_finishes_task(double now) {
  while (!running_.empty() && running_.top().finish <= now + kTimeEps) {
    RunningTask rt = running_.top();
    running_.pop();
    QueueRun& q = queues_.at(rt.queue);
    JobRun& job = q.jobs[rt.job_index];
    SimEvent e;
    e.t = now;
    e.kind = EventKind::TaskFinish;
    e.queue = rt.queue;
    e.job = job.uid;
    e.stage = rt.stage;
    e.task = rt.task;
    emit(std::move(e));
    q.usage = q.usage.saturating_sub(rt.demand);
    used_ = used_.saturating_sub(rt.demand);
    if (job.burst >= 0) {
      q.bursts[job.burst].running = q.bursts[job.burst].running.saturating_sub(rt.demand);
    }
    job.stages[rt.stage].unfinished--;
    if (--job.unfinished_tasks == 0) {
      job.complete = true;
      finalize_job(now, rt.queue, job);
    }
  }
}

void Engine::start_tasks(double now, const ShareLevels& shares) {
  ResourceVector cluster_head = spec_.cluster.capacity.saturating_sub(used_);
  for (auto& [id, q] : queues_) {
    if (!q.admitted || q.exited) continue;
    auto s = shares.share.find(id);
    if (s == shares.share.end()) continue;
    // Non-preemption: running tasks beyond the new share are never reclaimed,
    // and such a queue starts nothing new this epoch.
    if (!q.usage.leq(s->second)) continue;
    ResourceVector head = s->second.saturating_sub(q.usage);
    for (size_t ji = q.first_incomplete; ji < q.jobs.size(); ++ji) {
      JobRun& job = q.jobs[ji];
      if (job.complete) continue;
      if (job.arrival > now + kTimeEps) break;  // arrival-ordered
      for (size_t si = 0; si < job.stages.size(); ++si) {
        StageRun& st = job.stages[si];
        if (st.unstarted <= 0 || !stage_runnable(job, static_cast<int>(si))) continue;
        const StageSpec& ss = job.spec->stages[si];
        while (st.unstarted > 0 && ss.task_demand.leq(head) && ss.task_demand.leq(cluster_head)) {
          int task_index = ss.task_count - st.unstarted;
          st.unstarted--;
          running_.push({now + ss.task_duration, id, static_cast<int>(ji), static_cast<int>(si),
                         task_index, ss.task_demand});
          q.usage += ss.task_demand;
          used_ += ss.task_demand;
          head = head.saturating_sub(ss.task_demand);
          cluster_head = cluster_head.saturating_sub(ss.task_demand);
          if (job.burst >= 0) q.bursts[job.burst].running += ss.task_demand;
          SimEvent e;
          e.t = now;
          e.kind = EventKind::TaskStart;
          e.queue = id;
          e.job = job.uid;
          e.stage = static_cast<int>(si);
          e.task = task_index;
          e.value = ss.task_duration;
          e.vec = ss.task_demand;
          emit(std::move(e));
        }
      }
    }
  }
}

std::vector<std::pair<std::string, int>> Engine::fluid_detect_completions(double now) {
  std::vector<std::pair<std::string, int>> done;
  for (auto& [id, q] : queues_) {
    auto consider = [&](size_t ji) {
      JobRun& job = q.jobs[ji];
      if (job.complete || job.arrival > now + kTimeEps) return;
      if (dominant_share(job.remaining, spec_.cluster.capacity) <= kCompareSlack) {
        job.remaining = ResourceVector(dims_);
        job.complete = true;
        done.emplace_back(id, static_cast<int>(ji));
      }
    };
    for (size_t ji : q.active_rates) consider(ji);
    for (size_t ji : q.zero_work) consider(ji);
  }
  return done;
}

void Engine::fluid_assign_rates(double now, const ShareLevels& shares) {
  for (auto& [id, q] : queues_) {
    for (size_t ji : q.active_rates) q.jobs[ji].rate = ResourceVector(dims_);
    q.active_rates.clear();
    ResourceVector left(dims_);
    auto s = shares.share.find(id);
    if (s != shares.share.end()) left = s->second;
    ResourceVector usage(dims_);
    bool exhausted = left.is_zero(1e-12);
    for (size_t ji = q.first_incomplete; ji < q.jobs.size() && !exhausted; ++ji) {
      JobRun& job = q.jobs[ji];
      if (job.complete) continue;
      if (job.arrival > now + kTimeEps) break;  // arrival-ordered
      double lam = kInf;
      for (size_t k = 0; k < dims_; ++k) {
        if (job.remaining[k] > 1e-12) {
          lam = std::min(lam, job.rate_cap[k] / job.remaining[k]);
          lam = std::min(lam, std::max(left[k], 0.0) / job.remaining[k]);
        }
      }
      if (lam == kInf || lam < 0.0) lam = 0.0;
      job.rate = job.remaining * lam;
      if (!job.rate.is_zero(0.0)) {
        left = left.saturating_sub(job.rate);
        usage += job.rate;
        q.active_rates.push_back(ji);
        exhausted = left.is_zero(1e-12);
      }
    }
    q.usage = usage;
  }
}

void Engine::integrate(double now, double until) {
  double dt = until - now;
  if (dt <= 0.0) return;
  if (spec_.mode == SimMode::Fluid) {
    for (auto& [id, q] : queues_) {
      for (size_t ji : q.active_rates) {
        JobRun& job = q.jobs[ji];
        if (job.complete || job.rate.is_zero(0.0)) continue;
        job.remaining = job.remaining.saturating_sub(job.rate * dt);
        if (job.burst >= 0) q.bursts[job.burst].consumed += job.rate * dt;
      }
    }
  } else {
    for (auto& [id, q] : queues_) {
      for (auto& b : q.bursts) {
        if (b.arrived && !b.running.is_zero(0.0)) b.consumed += b.running * dt;
      }
    }
  }
  advance_mbvt(dt);
}

void Engine::advance_mbvt(double dt) {
  if (spec_.policy != Policy::Mbvt) return;
  for (auto& [id, st] : mbvt_.queues) {
    auto it = queues_.find(id);
    if (it == queues_.end()) continue;
    st.effective_virtual_time += dominant_share(it->second.usage, spec_.cluster.capacity) * dt;
  }
}

bool Engine::work_pending() const {
  for (const auto& [id, q] : queues_) {
    if (q.cls == QueueClass::Rejected) continue;
    if (!q.admitted) return true;  // not yet submitted
    if (!q.exited && q.incomplete_jobs > 0) return true;
  }
  return false;
}

double Engine::next_epoch_after(double now) const {
  double next = horizon_;
  auto consider = [&](double t) {
    if (t > now + kTimeEps) next = std::min(next, t);
  };
  for (const auto& [id, q] : queues_) {
    if (q.cls == QueueClass::Rejected || q.exited) continue;
    if (!q.admitted) consider(q.submit_time);
    for (const auto& b : q.bursts) {
      if (q.admitted && !b.arrived) consider(b.spec->arrival_time);
      if (b.arrived && !b.complete) consider(b.spec->deadline());
    }
  }
  if (spec_.mode == SimMode::Task) {
    if (!running_.empty()) consider(running_.top().finish);
    double tick = spec_.cluster.tick_seconds;
    consider(std::floor(now / tick + 1.0 + 1e-9) * tick);
  } else {
    // Job completions under the current rates.
    for (const auto& [id, q] : queues_) {
      for (size_t ji : q.active_rates) {
        const JobRun& job = q.jobs[ji];
        if (job.complete) continue;
        double t = 0.0;
        bool consuming = false;
        for (size_t k = 0; k < dims_; ++k) {
          if (job.rate[k] > 1e-12) {
            t = std::max(t, job.remaining[k] / job.rate[k]);
            consuming = true;
          }
        }
        if (consuming) consider(now + std::max(t, kTimeEps));
      }
      // Soft-guarantee exhaustion: the burst's integrated allocation reaching
      // its declared demand re-tiers the queue.
      if (is_bopf_family() && q.cls == QueueClass::Soft) {
        const BurstRun* b = active_burst(q, now);
        if (b != nullptr) {
          ResourceVector owed = b->spec->demand.saturating_sub(b->consumed);
          ResourceVector rate = (spec_.mode == SimMode::Fluid) ? q.usage : b->running;
          double t = 0.0;
          bool consuming = false;
          for (size_t k = 0; k < dims_; ++k) {
            if (rate[k] > 1e-12 && owed[k] > 1e-12) {
              t = std::max(t, owed[k] / rate[k]);
              consuming = true;
            }
          }
          if (consuming) consider(now + std::max(t, kTimeEps));
        }
      }
    }
    if (spec_.policy == Policy::Mbvt) {
      // Virtual-time crossings change the sharing front mid-flight; cap the
      // step so the front is re-evaluated promptly.
      consider(now + spec_.cluster.tick_seconds);
    }
  }
  return next;
}

EventLog Engine::run() {
  spec_.validate();
  log_.capacity = spec_.cluster.capacity;
  log_.resource_names = spec_.cluster.resource_names;
  log_.policy = policy_name(spec_.policy);
  log_.mode = spec_.mode;
  used_ = ResourceVector(dims_);
  build_queues();

  SimEvent start;
  start.t = 0.0;
  start.kind = EventKind::RunStart;
  start.info = policy_name(spec_.policy);
  start.vec = spec_.cluster.capacity;
  emit(std::move(start));

  double now = 0.0;
  long safety = 0;
  while (true) {
    if (++safety > 50'000'000) throw StructuralError("engine: epoch limit exceeded");
    process_arrivals(now);
    if (spec_.mode == SimMode::Task) {
      ShareLevels shares = allocate(now);
      snapshot(now, shares);
      process_finishes_task(now);
      start_tasks(now, shares);
    } else {
      // Completions at `now` are facts of this instant: fold them into the
      // state before computing shares (a dying job must not shape the share
      // direction for the whole next interval), but emit their events after
      // the snapshot to keep the fixed arrivals/allocation/finishes order.
      auto done = fluid_detect_completions(now);
      ShareLevels shares = allocate(now);
      fluid_assign_rates(now, shares);
      snapshot(now, shares);
      for (auto& [qid, ji] : done) finalize_job(now, qid, queues_.at(qid).jobs[ji]);
    }

    if (!work_pending()) {
      SimEvent end;
      end.t = now;
      end.kind = EventKind::RunEnd;
      emit(std::move(end));
      break;
    }
    if (now >= horizon_ - kTimeEps) {
      log_.truncated = true;
      SimEvent end;
      end.t = now;
      end.kind = EventKind::RunEnd;
      end.flag = true;
      emit(std::move(end));
      break;
    }
    double next = std::min(next_epoch_after(now), horizon_);
    integrate(now, next);
    now = next;
  }
  return log_;
}

}  // namespace

EventLog run(const RunSpec& spec) {
  Engine engine(spec);
  return engine.run();
}

FluidResult fluid_oracle(RunSpec spec) {
  spec.mode = SimMode::Fluid;
  FluidResult result;
  result.log = run(spec);

  for (const auto& q : spec.queues) {
    if (q.is_lq()) {
      result.burst_completion[q.id] =
          std::vector<double>(q.bursts.size(), std::numeric_limits<double>::quiet_NaN());
    }
  }
  for (const auto& e : result.log.events) {
    if (e.kind == EventKind::BurstComplete) result.burst_completion[e.queue][e.burst] = e.t;
  }

  auto frames = expand_snapshots(result.log);
  std::map<std::string, ResourceVector> cum;
  for (const auto& q : spec.queues) {
    cum[q.id] = ResourceVector(spec.cluster.dims());
    result.cumulative[q.id].push_back({0.0, cum[q.id]});
  }
  for (size_t i = 0; i + 1 < frames.size(); ++i) {
    double dt = frames[i + 1].t - frames[i].t;
    if (dt <= 0.0) continue;
    for (const auto& [id, row] : frames[i].rows) {
      cum[id] += row.usage * dt;
      result.cumulative[id].push_back({frames[i + 1].t, cum[id]});
    }
  }
  return result;
}

std::vector<SnapshotFrame> expand_snapshots(const EventLog& log) {
  std::vector<SnapshotFrame> frames;
  std::map<std::string, SnapshotRow> current;
  for (const auto& e : log.events) {
    if (e.kind != EventKind::AllocationSnapshot) continue;
    for (const auto& [id, row] : e.rows) current[id] = row;
    if (!frames.empty() && frames.back().t == e.t) {
      frames.back().rows = current;
    } else {
      frames.push_back({e.t, current});
    }
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json vec_json(const ResourceVector& v) {
  ordered_json a = ordered_json::array();
  for (size_t k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

ResourceVector vec_from(const ordered_json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(x.get<double>());
  return ResourceVector(std::move(v));
}

}  // namespace

void EventLog::write_jsonl(std::ostream& os) const {
  {
    ordered_json h;
    h["kind"] = "Header";
    h["policy"] = policy;
    h["mode"] = mode == SimMode::Task ? "task" : "fluid";
    h["capacity"] = vec_json(capacity);
    h["resources"] = resource_names;
    h["truncated"] = truncated;
    os << h.dump() << "\n";
  }
  for (const auto& e : events) {
    ordered_json j;
    j["t"] = e.t;
    j["kind"] = event_kind_name(e.kind);
    if (!e.queue.empty()) j["queue"] = e.queue;
    if (!e.job.empty()) j["job"] = e.job;
    if (!e.info.empty()) j["info"] = e.info;
    if (e.burst >= 0) j["burst"] = e.burst;
    if (e.stage >= 0) j["stage"] = e.stage;
    if (e.task >= 0) j["task"] = e.task;
    switch (e.kind) {
      case EventKind::BurstArrival: j["deadline"] = e.value; break;
      case EventKind::BurstComplete:
        j["deadline"] = e.value;
        j["hit"] = e.flag;
        break;
      case EventKind::JobComplete: j["arrival"] = e.value; break;
      case EventKind::TaskStart: j["duration"] = e.value; break;
      case EventKind::AdmissionDecision:
        if (e.info != "exit") j["denominator"] = e.value;
        break;
      case EventKind::RunEnd: j["truncated"] = e.flag; break;
      default: break;
    }
    if (e.vec.size() > 0) j["vec"] = vec_json(e.vec);
    if (!e.rows.empty()) {
      ordered_json rows;
      for (const auto& [id, row] : e.rows) {
        ordered_json r;
        r["share"] = vec_json(row.share);
        r["usage"] = vec_json(row.usage);
        r["demand"] = vec_json(row.demand);
        rows[id] = std::move(r);
      }
      j["rows"] = std::move(rows);
    }
    os << j.dump() << "\n";
  }
}

EventLog EventLog::read_jsonl(std::istream& is) {
  EventLog log;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& ex) {
      throw StructuralError("events line " + std::to_string(lineno) + ": " + ex.what());
    }
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "Header") {
      log.policy = j.value("policy", "");
      log.mode = j.value("mode", "task") == std::string("fluid") ? SimMode::Fluid : SimMode::Task;
      log.capacity = vec_from(j.at("capacity"));
      log.resource_names = j.value("resources", std::vector<std::string>{});
      log.truncated = j.value("truncated", false);
      continue;
    }
    SimEvent e;
    e.t = j.at("t").get<double>();
    bool found = false;
    for (EventKind k : {EventKind::RunStart, EventKind::BurstArrival, EventKind::AdmissionDecision,
                        EventKind::AllocationSnapshot, EventKind::TaskStart, EventKind::TaskFinish,
                        EventKind::JobComplete, EventKind::BurstComplete, EventKind::RunEnd}) {
      if (kind == event_kind_name(k)) {
        e.kind = k;
        found = true;
        break;
      }
    }
    if (!found) {
      throw StructuralError("events line " + std::to_string(lineno) + ": bad kind " + kind);
    }
    e.queue = j.value("queue", "");
    e.job = j.value("job", "");
    e.info = j.value("info", "");
    e.burst = j.value("burst", -1);
    e.stage = j.value("stage", -1);
    e.task = j.value("task", -1);
    for (const char* f : {"deadline", "arrival", "duration", "denominator"}) {
      if (j.contains(f)) e.value = j[f].get<double>();
    }
    if (j.contains("hit")) e.flag = j["hit"].get<bool>();
    if (j.contains("truncated")) e.flag = j["truncated"].get<bool>();
    if (j.contains("vec")) e.vec = vec_from(j["vec"]);
    if (j.contains("rows")) {
      for (auto it = j["rows"].begin(); it != j["rows"].end(); ++it) {
        SnapshotRow row;
        row.share = vec_from(it.value().at("share"));
        row.usage = vec_from(it.value().at("usage"));
        row.demand = vec_from(it.value().at("demand"));
        e.rows.emplace(it.key(), std::move(row));
      }
    }
    log.events.push_back(std::move(e));
  }
  return log;
}

void EventLog::write_alloc_csv(std::ostream& os) const {
  std::vector<std::string> names = resource_names;
  for (size_t k = names.size(); k < capacity.size(); ++k) names.push_back("r" + std::to_string(k));
  os << "time,queue";
  for (const auto& n : names) os << ",share_" << n;
  for (const auto& n : names) os << ",usage_" << n;
  os << "\n";
  for (const auto& frame : expand_snapshots(*this)) {
    for (const auto& [id, row] : frame.rows) {
      os << frame.t << "," << id;
      for (size_t k = 0; k < capacity.size(); ++k) os << "," << row.share[k];
      for (size_t k = 0; k < capacity.size(); ++k) os << "," << row.usage[k];
      os << "\n";
    }
  }
}

}  // namespace bopf
