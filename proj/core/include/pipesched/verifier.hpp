#ifndef PIPESCHED_VERIFIER_HPP
#define PIPESCHED_VERIFIER_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pipesched/scenario.hpp"
#include "pipesched/schedule.hpp"

namespace pipesched {

struct Segment {
  int batch = 0;
  std::string id;
  std::string product;
  double volume = 0.0;
};

/// Contents of the line at one instant, origin first.
struct PipelineState {
  double time = 0.0;
  std::vector<Segment> segments;

  double total() const;
};

struct Check {
  std::string tag;
  bool passed = true;
  std::string location;
  std::string detail;
};

struct DemandLine {
  std::string product;
  std::string depot;
  double delivered = 0.0;
  double demand_min = 0.0;
  double demand_max = 0.0;
  double backorder = 0.0;
};

struct VerificationReport {
  bool passed = true;
  /// Every failed check, plus one passing entry per family that had no failure.
  std::vector<Check> checks;
  CostBreakdown recomputed_cost;
  std::vector<DemandLine> demand_ledger;

  std::vector<Check> failures() const;
  bool failed(const std::string& tag) const;
  std::string to_json() const;
  std::string to_text() const;
};

struct VerifyOptions {
  double volume_tolerance = 1e-4;  // fraction of the pipeline volume
  double time_tolerance = 1e-3;    // hours
  double cost_tolerance = 1e-4;    // relative, against the schedule's reported total
};

/// Replays the schedule from the scenario's initial line fill and checks every
/// physical and contractual law run by run.
VerificationReport simulate(const Schedule& sch, const Scenario& s, const VerifyOptions& opt = {});

/// Line contents at time t. A run in progress is applied pro rata to its
/// elapsed fraction. Throws std::out_of_range unless 0 <= t <= makespan.
PipelineState state_at(const Schedule& sch, const Scenario& s, double t);

enum class MutationClass { Volume, TimeShift, ProductSwap, DepotSwap };
const char* mutation_class_name(MutationClass c);

struct MutationOptions {
  std::vector<MutationClass> classes{MutationClass::Volume, MutationClass::TimeShift, MutationClass::ProductSwap,
                                     MutationClass::DepotSwap};
  double delta_min = 1.0;  // volume units
  double delta_max = 10.0;
  double shift_min = 1.0;  // hours
  double shift_max = 10.0;
};

struct MutationReport {
  std::size_t tried = 0;
  std::size_t caught = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // name -> (tried, caught)
  std::vector<std::string> escaped;  // descriptions of undetected mutants

  double rate() const { return tried ? static_cast<double>(caught) / static_cast<double>(tried) : 0.0; }
};

/// Applies n random single-field perturbations to a passing schedule and
/// reports how many the simulation flags.
MutationReport random_mutation_suite(const Schedule& sch, const Scenario& s, std::size_t n, std::uint64_t seed,
                                     const MutationOptions& opt = {});

}  // namespace pipesched

#endif  // PIPESCHED_VERIFIER_HPP
