#ifndef PIPESCHED_REPLANNER_HPP
#define PIPESCHED_REPLANNER_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "pipesched/model.hpp"
#include "pipesched/scenario.hpp"
#include "pipesched/schedule.hpp"
#include "pipesched/solver.hpp"
#include "pipesched/verifier.hpp"

namespace pipesched {

/// One parameter change at a terminal. Sources take rate_min / rate_max,
/// depots take delivery_min / delivery_max.
struct Override {
  std::string terminal;
  std::string parameter;
  double value = 0.0;
};

/// What actually happened at `time`. Each override holds from `time` until a
/// later realization replaces it.
struct Realization {
  std::string id;
  double time = 0.0;
  std::vector<Override> overrides;
};

std::vector<Realization> parse_realizations(const std::string& json_text);
std::vector<Realization> load_realizations(const std::string& path);

/// Inserts an event at every realization time and rewrites the affected
/// timelines from that interval on. Throws ScenarioError on unknown terminals,
/// unknown parameters or times outside (0, horizon).
Scenario apply_realizations(const Scenario& base, const std::vector<Realization>& realizations);

struct PlanOptions {
  BuildOptions build;
  SolverConfig solver;
  VerifyOptions verify;
};

struct PlanResult {
  SolveStatus status = SolveStatus::Error;
  double objective = 0.0;  // solver objective without the tie-break term
  double gap = 0.0;
  double seconds = 0.0;
  ModelStats stats;
  Schedule schedule;
  VerificationReport report;
  std::string message;
  bool extracted = false;

  bool has_schedule() const { return extracted; }
  bool verified() const { return extracted && report.passed; }
};

/// Builds, solves, extracts and verifies. Solver failures are reported in
/// `status` and `message`; SolverError is thrown only for setup problems.
PlanResult plan(const Scenario& s, const PlanOptions& opt = {});

/// Plans with every known event in the model.
PlanResult plan_event_aware(const Scenario& s, const PlanOptions& opt = {});

/// Residual problem left after executing `sch` up to time t.
struct Residual {
  Scenario scenario;       // times relative to t
  std::vector<int> slot_map;  // residual slot (1-based, position i-1) -> original slot
  Schedule prefix;         // executed part, runs in progress truncated at t
  double time = 0.0;
};

/// Freezes everything executed before t, 0 <= t <= horizon (std::out_of_range
/// otherwise). The line contents at t become the old
/// batches, unused new slots keep their relative order, and demands and supplies
/// shrink by what the prefix already moved (never below zero).
Residual freeze_prefix(const Schedule& sch, const Scenario& s, double t);

/// Recomputes trajectories, backorders and cost of a schedule from its actions.
void rebuild_schedule(Schedule& sch, const Scenario& s);

enum class BaselineMode { Resume, Resolve };
const char* baseline_mode_name(BaselineMode m);
BaselineMode parse_baseline_mode(const std::string& name);

struct BaselineResult {
  BaselineMode mode = BaselineMode::Resume;
  bool completed = false;
  PlanResult nominal;                 // event-blind plan the operator starts from
  Schedule schedule;                  // as executed under the realized conditions
  VerificationReport report;          // against the realized scenario
  std::vector<std::string> log;       // halts, shifts and re-solves
};

/// The legacy regime. The operator plans without events, then at each
/// realization either halts and resumes the unchanged remainder once conditions
/// allow it (Resume) or freezes the prefix and re-solves the rest (Resolve).
/// A precomputed event-blind plan may be passed to avoid solving it again.
BaselineResult plan_reactive_baseline(const Scenario& base, const std::vector<Realization>& realizations,
                                      BaselineMode mode, const PlanOptions& opt = {},
                                      const PlanResult* nominal = nullptr);

struct ComparisonReport {
  double aware_makespan = 0.0;
  double baseline_makespan = 0.0;
  double delta = 0.0;                // baseline minus event-aware, hours
  double delta_over_baseline = 0.0;  // fraction of the baseline makespan
  double delta_over_aware = 0.0;     // fraction of the event-aware makespan
  CostBreakdown aware_cost;
  CostBreakdown baseline_cost;
  double cost_delta = 0.0;           // baseline minus event-aware
  std::size_t aware_runs = 0;
  std::size_t baseline_runs = 0;
  bool aware_verified = false;
  bool baseline_verified = false;
  BaselineMode mode = BaselineMode::Resume;
  std::vector<std::string> notes;

  std::string to_text() const;
  std::string to_json() const;
};

/// Both schedules are judged against `s`, the scenario as it actually unfolded.
ComparisonReport compare(const Schedule& aware, const Schedule& baseline, const Scenario& s);
ComparisonReport compare(const PlanResult& aware, const BaselineResult& baseline, const Scenario& realized);

}  // namespace pipesched

#endif  // PIPESCHED_REPLANNER_HPP
