#include <cstdlib>
#include <optional>

#include "doctest.h"
#include "fixtures.hpp"
#include "pipesched/extract.hpp"
#include "pipesched/schedule.hpp"
#include "pipesched/solver.hpp"
#include "pipesched/verifier.hpp"

using namespace pipesched;
using pipesched::testing::toy_scenario;

namespace {

// min -x - y  s.t.  x + 2y <= 4,  3x + y <= 6,  x, y integer in [0, 10].
ModelInstance tiny_ip() {
  ModelInstance m;
  m.name = "TINY";
  const auto x = m.add_variable(VarRef::make(VarKind::C, {1}), 0, 10, true);
  const auto y = m.add_variable(VarRef::make(VarKind::L, {1}), 0, 10, true);
  m.add_constraint({{{x, 1}, {y, 2}}, Sense::LessEqual, 4, "eq1"});
  m.add_constraint({{{x, 3}, {y, 1}}, Sense::LessEqual, 6, "eq2"});
  m.objective() = {{x, -1}, {y, -1}};
  return m;
}

double brute_force_tiny() {
  double best = 0;
  for (int x = 0; x <= 10; ++x) {
    for (int y = 0; y <= 10; ++y) {
      if (x + 2 * y <= 4 && 3 * x + y <= 6) best = std::min(best, -static_cast<double>(x + y));
    }
  }
  return best;
}

class ScopedEnv {
 public:
  explicit ScopedEnv(const char* name) : name_(name) {
    if (const char* v = std::getenv(name)) old_ = v;
    ::unsetenv(name);
  }
  ~ScopedEnv() {
    if (old_) ::setenv(name_, old_->c_str(), 1);
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

}  // namespace

TEST_CASE("parse_solution reads CBC reports") {
  const auto m = tiny_ip();

  SUBCASE("optimal") {
    const auto sol = parse_solution("Optimal - objective value -2.00000000\n"
                                    "      0 C_1                     1                       0\n"
                                    "      1 L_1                     0.99999999              0\n",
                                    m);
    CHECK(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-2));
    REQUIRE(sol.has_values());
    CHECK(sol.values[0] == 1);
    CHECK(sol.values[1] == 1);  // snapped to the integer
    CHECK(sol.defaulted.empty());
  }
  SUBCASE("unreported variables default to zero") {
    const auto sol = parse_solution("Optimal - objective value -1\n 0 C_1 1 0\n", m);
    REQUIRE(sol.has_values());
    CHECK(sol.values[1] == 0);
    CHECK(sol.defaulted == std::vector<std::size_t>{1});
  }
  SUBCASE("starred lines") {
    const auto sol = parse_solution("Stopped on iterations - objective value -1\n**    0 C_1  1  0\n", m);
    CHECK(sol.status == SolveStatus::Feasible);
    CHECK(sol.values[0] == 1);
  }
  SUBCASE("time limit with incumbent") {
    const auto sol = parse_solution("Stopped on time - objective value -1\n 0 C_1 1 0\n", m);
    CHECK(sol.status == SolveStatus::TimeLimit);
    CHECK(sol.has_values());
  }
  SUBCASE("time limit without incumbent") {
    const auto sol = parse_solution(
        "Stopped on time (no integer solution - continuous used) - objective value -2.8\n 0 C_1 1.6 0\n", m);
    CHECK(sol.status == SolveStatus::TimeLimit);
    CHECK_FALSE(sol.has_values());
  }
  SUBCASE("infeasible") {
    const auto sol = parse_solution("Infeasible - objective value 0\n", m);
    CHECK(sol.status == SolveStatus::Infeasible);
    CHECK_FALSE(sol.has_values());
  }
  SUBCASE("garbage") {
    CHECK_THROWS_AS(parse_solution("", m), SolverError);
    CHECK_THROWS_AS(parse_solution("Segmentation fault\n", m), SolverError);
    try {
      parse_solution("Optimal - objective value 1\n 0 C_1 1 0\n 1 L_1 oops 0\n", m);
      FAIL("expected SolverError");
    } catch (const SolverError& e) {
      CHECK(e.kind() == SolverError::Kind::UnparsableSolution);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
}

TEST_CASE("MPS format follows name lengths") {
  const auto tiny = emit_mps(tiny_ip());
  CHECK_FALSE(tiny.free_format);
  CHECK(tiny.warnings.empty());
  for (const char* section : {"ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA", "'INTORG'", "'INTEND'"}) {
    CHECK(tiny.text.find(section) != std::string::npos);
  }
  MpsOptions force;
  force.force_free = true;
  CHECK(emit_mps(tiny_ip(), force).free_format);

  const auto toy = emit_mps(build_model(toy_scenario()));
  CHECK(toy.free_format);
  CHECK_FALSE(toy.warnings.empty());

  MpsOptions relax;
  relax.relax_integrality = true;
  CHECK(emit_mps(tiny_ip(), relax).text.find("'INTORG'") == std::string::npos);
}

TEST_CASE("check_values and objective evaluation") {
  const auto m = tiny_ip();
  const auto ok = check_values(m, {1, 1});
  CHECK(ok.max_violation == 0);
  const auto bad = check_values(m, {2, 2});
  CHECK(bad.max_violation == doctest::Approx(2));
  REQUIRE(bad.worst.has_value());
  CHECK(*bad.worst == 0);
  CHECK(check_values(m, {0.5, 0}).max_integrality_violation == doctest::Approx(0.5));
  CHECK(check_values(m, {11, 0}).max_bound_violation == doctest::Approx(1));
  CHECK(evaluate_objective(m, {1, 1}) == -2);
}

TEST_CASE("registered backends and point rejection") {
  const auto m = tiny_ip();
  register_backend("test-infeasible-point", [](const ModelInstance&, const SolverConfig&) {
    Solution s;
    s.status = SolveStatus::Optimal;
    s.values = {3, 3};
    return s;
  });
  register_backend("test-good-point", [](const ModelInstance&, const SolverConfig&) {
    Solution s;
    s.status = SolveStatus::Optimal;
    s.values = {2, 0};
    s.objective = -2;
    return s;
  });
  CHECK(has_backend("test-good-point"));

  SolverConfig cfg;
  cfg.backend = "test-infeasible-point";
  const auto rejected = solve(m, cfg);
  CHECK(rejected.status == SolveStatus::Error);
  CHECK_FALSE(rejected.has_values());
  CHECK(rejected.log.find("rejected") != std::string::npos);

  cfg.backend = "test-good-point";
  const auto kept = solve(m, cfg);
  CHECK(kept.status == SolveStatus::Optimal);
  CHECK(kept.values == std::vector<double>{2, 0});

  cfg.backend = "no-such-backend";
  try {
    solve(m, cfg);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverError::Kind::BackendNotFound);
  }

  SolverConfig zero;
  zero.time_limit = 0;
  try {
    solve(m, zero);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverError::Kind::InvalidConfig);
  }
}

TEST_CASE("missing CBC executable is reported as BackendNotFound") {
  ScopedEnv guard("PIPESCHED_SOLVER");
  SolverConfig cfg;
  cfg.solver_path = "/nonexistent/cbc";
  CHECK_FALSE(resolve_solver_path(cfg).has_value());
  try {
    solve(tiny_ip(), cfg);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverError::Kind::BackendNotFound);
  }
}

TEST_CASE("CBC solves the tiny integer program") {
  const auto sol = solve(tiny_ip());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(brute_force_tiny()));
  CHECK(evaluate_objective(tiny_ip(), sol.values) == doctest::Approx(brute_force_tiny()));
}

TEST_CASE("CBC finds the hand-derived toy optimum") {
  const auto s = toy_scenario();
  BuildOptions opt;
  opt.tie_break = true;
  const auto m = build_model(s, opt);
  SolverConfig cfg;
  cfg.time_limit = 120;
  const auto sol = solve(m, cfg);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(evaluate_cost(m, sol.values) == doctest::Approx(30).epsilon(1e-6));

  const auto sch = extract_schedule(sol, m, s);
  const auto rep = simulate(sch, s);
  INFO(rep.to_text());
  CHECK(rep.passed);
  CHECK(rep.recomputed_cost.total == doctest::Approx(30).epsilon(1e-6));
  // 20 units at 2 per hour from the only cheap source.
  CHECK(makespan(sch) == doctest::Approx(10).epsilon(1e-4));
}
