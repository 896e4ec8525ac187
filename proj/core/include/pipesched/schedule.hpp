#ifndef PIPESCHED_SCHEDULE_HPP
#define PIPESCHED_SCHEDULE_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pipesched/scenario.hpp"

namespace pipesched {

/// Batches are referred to by their 1-based slot in Scenario::slots().
struct Injection {
  std::string source;
  int batch = 0;
  std::string product;
  double volume = 0.0;
  double duration = 0.0;  // hours the source actually pumps (<= run length)
};

struct Delivery {
  std::string depot;
  int batch = 0;
  std::string product;
  double volume = 0.0;
};

struct PumpingRun {
  int index = 0;        // k in the model
  double start = 0.0;   // hours
  double end = 0.0;     // hours
  int interval = 1;     // event interval e containing the run
  /// Set on the executed part of a run cut short by a halt, and on the run
  /// that completes it later. Together they form one logical run.
  bool interrupted = false;
  bool resumes = false;
  std::vector<Injection> injections;
  std::vector<Delivery> deliveries;

  double length() const { return end - start; }
};

struct BatchTrajectory {
  int batch = 0;
  std::string id;  // display id
  std::string product;
  bool old = false;
  /// Upper coordinate and size before the first run (position 0) and after
  /// each run of the schedule.
  std::vector<double> upper;
  std::vector<double> size;
};

struct Backorder {
  std::string product;
  std::string depot;
  double volume = 0.0;
};

struct CostBreakdown {
  double interface = 0.0;
  double pumping = 0.0;
  double backorder = 0.0;
  double total = 0.0;
};

struct Schedule {
  std::vector<PumpingRun> runs;
  std::vector<BatchTrajectory> trajectories;
  std::vector<Backorder> backorders;
  CostBreakdown cost;

  /// Display id of a slot, or "slot<i>" when the slot holds no real batch.
  std::string batch_id(int batch) const;
  const BatchTrajectory* trajectory(int batch) const;
};

/// Completion time of the last run. Throws std::invalid_argument on an empty schedule.
double makespan(const Schedule& sch);

/// Interface, pumping and backorder costs recomputed from the schedule's actions.
CostBreakdown cost_breakdown(const Schedule& sch, const Scenario& s);

/// Delivered volume of `product` to `depot` over the whole schedule.
double delivered(const Schedule& sch, const std::string& product, const std::string& depot);

/// Real batches in slot order: old batches plus every slot that receives an injection.
std::vector<int> real_batches(const Schedule& sch, const Scenario& s);

/// Assigns display ids "B<n>" by rank among real batches, far end first.
void assign_batch_ids(Schedule& sch, const Scenario& s);

std::string render_text(const Schedule& sch, const Scenario& s);
std::string render_svg(const Schedule& sch, const Scenario& s);

std::string schedule_to_json(const Schedule& sch);
/// Throws std::runtime_error on malformed input.
Schedule schedule_from_json(const std::string& text);

/// Times are printed with two decimals throughout.
std::string format_hours(double h);

}  // namespace pipesched

#endif  // PIPESCHED_SCHEDULE_HPP
