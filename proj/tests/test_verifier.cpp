#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "pipesched/verifier.hpp"

using namespace pipesched;
using pipesched::testing::toy_scenario;
using pipesched::testing::toy_schedule;

namespace {

std::set<std::string> failed_tags(const VerificationReport& rep) {
  std::set<std::string> out;
  for (const auto& c : rep.failures()) out.insert(c.tag);
  return out;
}

std::string read(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("hand-built toy plan verifies") {
  const auto s = toy_scenario();
  REQUIRE(validate(s).empty());
  const auto rep = simulate(toy_schedule(), s);
  INFO(rep.to_text());
  CHECK(rep.passed);
  CHECK(rep.failures().empty());
  CHECK(rep.recomputed_cost.interface == doctest::Approx(10));
  CHECK(rep.recomputed_cost.pumping == doctest::Approx(20));
  CHECK(rep.recomputed_cost.backorder == doctest::Approx(0));
  CHECK(rep.recomputed_cost.total == doctest::Approx(30));

  std::set<std::string> families;
  for (const auto& c : rep.checks) families.insert(c.tag);
  for (const char* tag : {"eq1", "eq11", "eq20", "eq23", "eq26", "eq29", "eq34", "cost"}) CHECK(families.count(tag));
}

TEST_CASE("each violated family is reported under its own tag") {
  const auto s0 = toy_scenario();
  const auto base = toy_schedule();

  SUBCASE("eq1 overlapping runs") {
    auto sch = base;
    sch.runs[1].start = 4;
    CHECK(simulate(sch, s0).failed("eq1"));
  }
  SUBCASE("eq2 past the horizon") {
    auto sch = base;
    sch.runs[1].start = 45;
    sch.runs[1].end = 55;
    sch.runs[1].interval = 2;
    CHECK(simulate(sch, s0).failed("eq2"));
  }
  SUBCASE("eq3 run straddles an event") {
    auto sch = base;
    sch.runs[1].start = 18;
    sch.runs[1].end = 23;
    CHECK(simulate(sch, s0).failed("eq3"));
  }
  SUBCASE("eq6 one source feeds two batches") {
    auto sch = base;
    sch.runs[0].injections = {{"S1", 3, "A", 5, 5}, {"S1", 4, "A", 5, 5}};
    CHECK(simulate(sch, s0).failed("eq6"));
  }
  SUBCASE("eq8 batch size") {
    auto s = s0;
    s.batch_size_min = 12;
    CHECK(simulate(base, s).failed("eq8"));
  }
  SUBCASE("eq9 pumping longer than the run") {
    auto sch = base;
    sch.runs[0].injections[0].duration = 6;
    CHECK(simulate(sch, s0).failed("eq9"));
  }
  SUBCASE("eq11 rate above the maximum") {
    auto sch = base;
    sch.runs[0].end = 4;
    sch.runs[0].injections[0].duration = 4;
    CHECK(simulate(sch, s0).failed("eq11"));
  }
  SUBCASE("eq11 rate below the minimum") {
    auto s = s0;
    s.sources[0].rate_min = EventTimeline::constant(2.5, 2);
    s.sources[0].rate_max = EventTimeline::constant(3, 2);
    CHECK(simulate(base, s).failed("eq11"));
  }
  SUBCASE("eq12 batch emptied below zero") {
    auto sch = base;
    sch.runs[0].deliveries = {{"D1", 2, "B", 12}};
    sch.runs[0].injections[0].volume = 12;
    CHECK(simulate(sch, s0).failed("eq12"));
  }
  SUBCASE("eq13 delivery with nothing pumped upstream") {
    auto sch = base;
    sch.runs[0].injections = {{"S2", 3, "A", 10, 5}};
    CHECK(simulate(sch, s0).failed("eq13"));
  }
  SUBCASE("eq14 trajectory disagrees with replay") {
    auto sch = base;
    sch.trajectories.push_back({3, "B3", "A", false, {0, 10, 20}, {0, 10, 15}});
    const auto rep = simulate(sch, s0);
    CHECK(rep.failed("eq14"));
    CHECK_FALSE(rep.failed("eq35"));
  }
  SUBCASE("eq35 wrong initial size") {
    auto sch = base;
    sch.trajectories.push_back({1, "O1", "A", true, {20, 20, 20}, {8, 10, 0}});
    CHECK(simulate(sch, s0).failed("eq35"));
  }
  SUBCASE("eq19 and eq18 imbalance") {
    auto sch = base;
    sch.runs[0].deliveries[0].volume = 9;
    const auto rep = simulate(sch, s0);
    CHECK(rep.failed("eq19"));
    CHECK(rep.failed("eq18"));
  }
  SUBCASE("eq20 batch not yet at the source") {
    auto sch = base;
    sch.runs[0].injections.push_back({"S2", 4, "A", 0, 0});
    CHECK(simulate(sch, s0).failed("eq20"));
  }
  SUBCASE("eq21 batch already past the source") {
    auto sch = base;
    sch.runs[0].injections = {{"S1", 1, "A", 10, 5}};
    CHECK(simulate(sch, s0).failed("eq21"));
  }
  SUBCASE("eq22 per-run delivery bound") {
    auto s = s0;
    s.depots[1].delivery_max = EventTimeline::constant(5, 2);
    CHECK(simulate(base, s).failed("eq22"));
  }
  SUBCASE("eq23 batch never reaches the depot") {
    auto sch = base;
    sch.runs[0].deliveries = {{"D2", 2, "B", 10}};
    CHECK(simulate(sch, s0).failed("eq23"));
  }
  SUBCASE("eq24 batch already past the depot") {
    auto s = s0;
    s.depots[0].sigma = 5;
    auto sch = base;
    sch.runs[1].deliveries = {{"D1", 1, "A", 10}};
    CHECK(simulate(sch, s).failed("eq24"));
  }
  SUBCASE("eq26 more delivered than can pass the depot") {
    auto sch = base;
    sch.runs[1].deliveries = {{"D1", 1, "A", 10}};
    CHECK(simulate(sch, s0).failed("eq26"));
  }
  SUBCASE("eq28 delivery from a slot that never held a batch") {
    auto sch = base;
    sch.runs[1].deliveries = {{"D2", 4, "A", 10}};
    CHECK(simulate(sch, s0).failed("eq28"));
  }
  SUBCASE("eq29 forbidden neighbours") {
    auto s = s0;
    s.forbidden_pairs = {{"B", "A"}};
    CHECK(simulate(base, s).failed("eq29"));
  }
  SUBCASE("eq29 ignores two old batches") {
    auto s = s0;
    s.forbidden_pairs = {{"A", "B"}};
    CHECK(simulate(base, s).passed);
  }
  SUBCASE("eq30 second product injected into a batch") {
    auto sch = base;
    sch.runs[1].injections[0].product = "B";
    CHECK(simulate(sch, s0).failed("eq30"));
  }
  SUBCASE("eq32 delivered product differs from the batch") {
    auto sch = base;
    sch.runs[1].deliveries[0].product = "B";
    CHECK(simulate(sch, s0).failed("eq32"));
  }
  SUBCASE("eq36 old batch recorded with another product") {
    auto sch = base;
    sch.trajectories.push_back({1, "O1", "B", true, {}, {}});
    CHECK(simulate(sch, s0).failed("eq36"));
  }
  SUBCASE("recorded product of a new batch binds its injections") {
    auto sch = base;
    sch.trajectories.push_back({3, "B3", "B", false, {}, {}});
    CHECK(simulate(sch, s0).failed("eq30"));
  }
  SUBCASE("eq34 over-delivery") {
    auto s = s0;
    s.depots[1].demand_max["A"] = 8;
    s.depots[1].demand_min["A"] = 8;
    CHECK(simulate(base, s).failed("eq34"));
  }
  SUBCASE("eq34 misreported backorder") {
    auto sch = base;
    sch.backorders.push_back({"A", "D2", 3});
    CHECK(simulate(sch, s0).failed("eq34"));
  }
  SUBCASE("eqSU supply window") {
    auto s = s0;
    s.sources[0].supply_max["A"] = 15;
    CHECK(simulate(base, s).failed("eqSU"));
  }
  SUBCASE("cost mismatch") {
    auto sch = base;
    sch.cost.total = 31;
    CHECK(failed_tags(simulate(sch, s0)) == std::set<std::string>{"cost"});
  }
  SUBCASE("unknown references stop at the schema check") {
    auto sch = base;
    sch.runs[0].injections[0].source = "S9";
    CHECK(failed_tags(simulate(sch, s0)) == std::set<std::string>{"schema"});
  }
}

TEST_CASE("backorders are charged when demand is missed") {
  auto s = toy_scenario();
  auto sch = toy_schedule();
  sch.runs.pop_back();
  sch.backorders.push_back({"A", "D2", 10});
  sch.cost = {};
  const auto rep = simulate(sch, s);
  CHECK(rep.passed);
  CHECK(rep.recomputed_cost.backorder == doctest::Approx(1000));
}

TEST_CASE("volume perturbation of 1e-4 of the line volume is detected") {
  const auto s = toy_scenario();
  const double unit = 1e-4 * s.pipeline_volume;
  auto sch = toy_schedule();
  sch.runs[1].deliveries[0].volume += unit;
  CHECK_FALSE(simulate(sch, s).passed);

  auto inj = toy_schedule();
  inj.runs[0].injections[0].volume -= unit;
  CHECK_FALSE(simulate(inj, s).passed);

  auto below = toy_schedule();
  below.runs[0].deliveries[0].volume += 0.25 * unit;
  below.runs[0].injections[0].volume += 0.25 * unit;
  below.cost = {};
  CHECK(simulate(below, s).passed);
}

TEST_CASE("state_at interpolates within a run") {
  const auto s = toy_scenario();
  const auto sch = toy_schedule();

  const auto mid = state_at(sch, s, 2.5);
  REQUIRE(mid.segments.size() == 3);
  CHECK(mid.segments[0].batch == 3);
  CHECK(mid.segments[0].product == "A");
  CHECK(mid.segments[0].volume == doctest::Approx(5));
  CHECK(mid.segments[1].batch == 2);
  CHECK(mid.segments[1].volume == doctest::Approx(5));
  CHECK(mid.segments[2].batch == 1);
  CHECK(mid.segments[2].volume == doctest::Approx(10));
  CHECK(mid.total() == doctest::Approx(20));

  const auto t5 = state_at(sch, s, 5);
  REQUIRE(t5.segments.size() == 2);
  CHECK(t5.segments[0].batch == 3);
  CHECK(t5.segments[1].batch == 1);

  const auto end = state_at(sch, s, 10);
  REQUIRE(end.segments.size() == 1);
  CHECK(end.segments[0].volume == doctest::Approx(20));

  CHECK(state_at(sch, s, 0).segments.size() == 2);
  CHECK_THROWS_AS(state_at(sch, s, 10.5), std::out_of_range);
  CHECK_THROWS_AS(state_at(sch, s, -1), std::out_of_range);
}

TEST_CASE("mutation suite is deterministic and catches the toy mutants") {
  const auto s = toy_scenario();
  const auto sch = toy_schedule();
  const auto a = random_mutation_suite(sch, s, 200, 7);
  const auto b = random_mutation_suite(sch, s, 200, 7);
  CHECK(a.tried == 200);
  CHECK(a.caught == b.caught);
  CHECK(a.escaped == b.escaped);
  std::size_t sum = 0;
  for (const auto& [name, tc] : a.per_class) sum += tc.first;
  CHECK(sum == a.tried);

  // Every volume change unbalances a run, so none may escape.
  MutationOptions vol;
  vol.classes = {MutationClass::Volume};
  CHECK(random_mutation_suite(sch, s, 100, 3, vol).rate() == 1.0);

  MutationOptions none;
  none.classes = {};
  CHECK_THROWS_AS(random_mutation_suite(sch, s, 1, 1, none), std::invalid_argument);
}

TEST_CASE("verifier sources do not depend on the model builder") {
  const std::string root = PIPESCHED_SOURCE_DIR;
  for (const char* file : {"/core/src/verifier.cpp", "/core/include/pipesched/verifier.hpp"}) {
    const auto text = read(root + file);
    REQUIRE_FALSE(text.empty());
    CHECK(text.find("model.hpp") == std::string::npos);
    CHECK(text.find("solver.hpp") == std::string::npos);
  }
}

TEST_CASE("report serialises") {
  const auto rep = simulate(toy_schedule(), toy_scenario());
  CHECK(rep.to_json().find("\"passed\"") != std::string::npos);
  CHECK(rep.to_text().find("cost") != std::string::npos);
}
