#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bopf/admission.hpp"
#include "bopf/allocation.hpp"
#include "bopf/spec_types.hpp"

namespace bopf {

enum class SimMode { Fluid, Task };

enum class EventKind {
  RunStart,
  BurstArrival,
  AdmissionDecision,
  AllocationSnapshot,
  TaskStart,
  TaskFinish,
  JobComplete,
  BurstComplete,
  RunEnd,
};

const char* event_kind_name(EventKind k);

struct SnapshotRow {
  ResourceVector share;
  ResourceVector usage;
  ResourceVector demand;
  bool operator==(const SnapshotRow&) const = default;
};

struct SimEvent {
  double t = 0.0;
  EventKind kind = EventKind::RunStart;
  std::string queue;
  std::string job;
  std::string info;   // admission decision, policy tag
  int burst = -1;
  int stage = -1;
  int task = -1;
  double value = 0.0; // kind-specific: deadline, arrival, duration, denominator
  bool flag = false;  // BurstComplete: deadline hit; RunEnd: truncated
  ResourceVector vec; // demand where relevant
  // AllocationSnapshot: rows for queues whose (share,usage,demand) changed
  // since the previous snapshot; consumers carry values forward.
  std::map<std::string, SnapshotRow> rows;
};

struct EventLog {
  ResourceVector capacity;
  std::vector<std::string> resource_names;
  std::string policy;
  SimMode mode = SimMode::Task;
  bool truncated = false;
  std::vector<SimEvent> events;

  // One JSON object per line, stable field order; byte-identical for
  // identical runs.
  void write_jsonl(std::ostream& os) const;
  static EventLog read_jsonl(std::istream& is);

  // Full (carried-forward) share/usage rows per snapshot epoch, for plotting
  // stacked share charts.
  void write_alloc_csv(std::ostream& os) const;
};

struct RunSpec {
  ClusterConfig cluster;
  std::vector<QueueSpec> queues;
  Policy policy = Policy::Bopf;
  SimMode mode = SimMode::Task;
  double horizon = 0.0;  // <= 0: 10x the last arrival time
  AllocOptions alloc;
  std::map<std::string, double> mbvt_warps;  // default: burst deadline window

  double effective_horizon() const;
  void validate() const;
};

// Deterministic event loop. Same-time processing order: arrivals ->
// admission -> allocation -> finishes -> starts, ties broken by id.
EventLog run(const RunSpec& spec);

// Closed-form fluid verification: exact rate integration between breakpoints,
// no task granularity. Task-mode completions may lag these, never lead.
struct FluidResult {
  EventLog log;
  // queue -> per-burst completion times (index = burst number; NaN if never).
  std::map<std::string, std::vector<double>> burst_completion;
  // queue -> piecewise-linear cumulative allocation curve (time, cumulative).
  std::map<std::string, std::vector<std::pair<double, ResourceVector>>> cumulative;
};

FluidResult fluid_oracle(RunSpec spec);

// Carried-forward snapshot expansion shared by csv export and metrics.
struct SnapshotFrame {
  double t = 0.0;
  std::map<std::string, SnapshotRow> rows;
};
std::vector<SnapshotFrame> expand_snapshots(const EventLog& log);

}  // namespace bopf
