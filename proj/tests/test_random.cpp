#include "doctest.h"
#include "pipesched/replanner.hpp"
#include "random_scenario.hpp"

using namespace pipesched;
using pipesched::testing::random_small_scenario;

namespace {

PlanOptions quick() {
  PlanOptions opt;
  opt.solver.time_limit = 30;
  return opt;
}

}  // namespace

TEST_CASE("solved random plans replay cleanly and their cost matches the replay") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    CAPTURE(seed);
    const auto s = random_small_scenario(seed);
    const auto p = plan(s, quick());
    if (!p.has_schedule()) {
      CHECK(p.status != SolveStatus::Optimal);
      continue;
    }
    INFO(p.report.to_text());
    CHECK(p.report.passed);
    CHECK(p.report.recomputed_cost.total == doctest::Approx(p.objective).epsilon(1e-4));

    const auto m = random_mutation_suite(p.schedule, s, 40, seed);
    CHECK(m.tried == 40);
    MutationOptions vol;
    vol.classes = {MutationClass::Volume};
    CHECK(random_mutation_suite(p.schedule, s, 20, seed, vol).rate() == 1.0);
  }
}

TEST_CASE("a single interval plans the same with or without the event mechanism") {
  int compared = 0;
  for (std::uint64_t seed = 1; seed <= 30 && compared < 3; ++seed) {
    const auto s = random_small_scenario(seed, {3, 2});
    REQUIRE(s.interval_count() == 1);
    CAPTURE(seed);
    auto with = quick();
    auto without = quick();
    without.build.event_mechanism = false;
    const auto a = plan(s, with);
    const auto b = plan(s, without);
    if (a.status != SolveStatus::Optimal || b.status != SolveStatus::Optimal) continue;
    ++compared;
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-6));
    CHECK(a.verified());
    CHECK(b.verified());
  }
  CHECK(compared == 3);
}
