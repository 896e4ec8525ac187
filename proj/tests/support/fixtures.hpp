#ifndef PIPESCHED_TESTS_FIXTURES_HPP
#define PIPESCHED_TESTS_FIXTURES_HPP

#include <string>

#include "pipesched/scenario.hpp"
#include "pipesched/schedule.hpp"

namespace pipesched::testing {

inline std::string data_path(const std::string& name) { return std::string(PIPESCHED_DATA_DIR) + "/" + name; }

/// Line of 20 units: O1 (A, 10) at the far end, O2 (B, 10) behind it.
/// S1 at the origin, S2 at 10; D1 at 10 wants 10 B, D2 at the end wants 10 A.
/// Events at 0, 20 and 50.
inline Scenario toy_scenario() {
  Scenario s;
  s.name = "toy";
  s.pipeline_volume = 20;
  s.horizon = 50;
  s.products = {{"A", ""}, {"B", ""}};
  s.events = {{"e0", 0, ""}, {"e1", 20, ""}, {"emax", 50, ""}};

  SourceTerminal s1;
  s1.id = "S1";
  s1.tau = 0;
  s1.rate_min = EventTimeline::constant(0, 2);
  s1.rate_max = EventTimeline::constant(2, 2);
  s1.pump_cost = {{"A", 1}, {"B", 2}};
  SourceTerminal s2 = s1;
  s2.id = "S2";
  s2.tau = 10;
  s2.pump_cost = {{"A", 3}, {"B", 3}};
  s.sources = {s1, s2};

  OutputTerminal d1;
  d1.id = "D1";
  d1.sigma = 10;
  d1.delivery_min = EventTimeline::constant(0, 2);
  d1.delivery_max = EventTimeline::constant(20, 2);
  d1.demand_min = {{"A", 0}, {"B", 10}};
  d1.demand_max = {{"A", 0}, {"B", 10}};
  d1.backorder_cost = {{"A", 100}, {"B", 100}};
  OutputTerminal d2 = d1;
  d2.id = "D2";
  d2.sigma = 20;
  d2.demand_min = {{"A", 10}, {"B", 0}};
  d2.demand_max = {{"A", 10}, {"B", 0}};
  s.depots = {d1, d2};

  s.old_batches = {{"O1", "A", 10}, {"O2", "B", 10}};
  s.interface_cost[{"A", "B"}] = 5;
  s.interface_cost[{"B", "A"}] = 5;
  s.batch_size_min = 0;
  s.batch_size_max = 20;
  s.run_count = 2;
  s.new_batch_count = 2;
  return s;
}

/// Hand-derived plan for toy_scenario, cost 30 (two interfaces, 20 units of A from S1):
/// run 1 [0,5] pumps 10 A into slot 3 and empties O2 at D1;
/// run 2 [5,10] pumps 10 more A into slot 3 and empties O1 at D2.
inline Schedule toy_schedule() {
  Schedule sch;
  PumpingRun r1;
  r1.index = 1;
  r1.start = 0;
  r1.end = 5;
  r1.interval = 1;
  r1.injections = {{"S1", 3, "A", 10, 5}};
  r1.deliveries = {{"D1", 2, "B", 10}};
  PumpingRun r2 = r1;
  r2.index = 2;
  r2.start = 5;
  r2.end = 10;
  r2.injections = {{"S1", 3, "A", 10, 5}};
  r2.deliveries = {{"D2", 1, "A", 10}};
  sch.runs = {r1, r2};
  sch.cost = {10, 20, 0, 30};
  return sch;
}

}  // namespace pipesched::testing

#endif  // PIPESCHED_TESTS_FIXTURES_HPP
