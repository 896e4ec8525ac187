#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "fixtures.hpp"
#include "pipesched/cli.hpp"

using namespace pipesched;
using namespace pipesched::cli;
using pipesched::testing::data_path;
using pipesched::testing::toy_scenario;
using pipesched::testing::toy_schedule;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pipesched-cli-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string write(const std::string& name, const std::string& text) const {
    const auto p = path / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Flags quick() {
  Flags f;
  f.time_limit = 120;
  f.tie_break = true;
  return f;
}

}  // namespace

TEST_CASE("validate exit codes") {
  TempDir tmp;
  CHECK(cmd_validate(data_path("case_study.json")).exit_code == kExitOk);
  CHECK(cmd_validate(tmp.file("missing.json")).exit_code == kExitUsage);
  CHECK(cmd_validate(tmp.write("broken.json", "{ \"name\": ")).exit_code == kExitUsage);

  auto bad = toy_scenario();
  bad.old_batches[0].volume0 = 3;
  const auto o = cmd_validate(tmp.write("bad.json", scenario_to_json(bad)));
  CHECK(o.exit_code == kExitDomain);
  CHECK(o.summary.find("old_batches") != std::string::npos);
  CHECK(o.json.find("violations") != std::string::npos);
}

TEST_CASE("verify exit codes") {
  TempDir tmp;
  const auto scen = tmp.write("toy.json", scenario_to_json(toy_scenario()));
  CHECK(cmd_verify(scen, tmp.write("good.json", schedule_to_json(toy_schedule()))).exit_code == kExitOk);

  auto broken = toy_schedule();
  broken.runs[0].deliveries[0].volume = 4;
  const auto o = cmd_verify(scen, tmp.write("bad.json", schedule_to_json(broken)));
  CHECK(o.exit_code == kExitDomain);
  CHECK(o.summary.find("eq19") != std::string::npos);

  CHECK(cmd_verify(scen, tmp.file("nope.json")).exit_code == kExitUsage);
  CHECK(cmd_verify(scen, tmp.write("junk.json", "[1,2")).exit_code == kExitUsage);
  CHECK(cmd_verify(tmp.file("nope.json"), tmp.file("good.json")).exit_code == kExitUsage);
}

TEST_CASE("plan writes verified outputs") {
  TempDir tmp;
  const auto scen = tmp.write("toy.json", scenario_to_json(toy_scenario()));
  auto flags = quick();
  flags.out = tmp.file("plan.json");
  flags.svg = tmp.file("plan.svg");
  const auto o = cmd_plan(scen, flags);
  INFO(o.summary);
  REQUIRE(o.exit_code == kExitOk);
  CHECK(o.plan.verified());
  CHECK(o.plan.objective == doctest::Approx(30).epsilon(1e-6));
  CHECK(o.json.find("\"makespan\"") != std::string::npos);
  CHECK(slurp(*flags.svg).find("</svg>") != std::string::npos);
  CHECK(cmd_verify(scen, *flags.out).exit_code == kExitOk);

  flags.out = (tmp.path / "no-such-dir" / "plan.json").string();
  CHECK(cmd_plan(scen, flags).exit_code == kExitUsage);
}

TEST_CASE("infeasible plans exit with a domain failure and nothing written") {
  TempDir tmp;
  auto s = toy_scenario();
  s.sources[0].supply_min["A"] = 30;  // only 20 units can ever leave the line
  auto flags = quick();
  flags.out = tmp.file("plan.json");
  const auto o = cmd_plan(tmp.write("tight.json", scenario_to_json(s)), flags);
  CHECK(o.exit_code == kExitDomain);
  CHECK(o.plan.status == SolveStatus::Infeasible);
  CHECK_FALSE(fs::exists(*flags.out));
  CHECK(o.summary.find("constraints by family") != std::string::npos);
}

TEST_CASE("missing solver is a usage error") {
  TempDir tmp;
  std::optional<std::string> saved;
  if (const char* v = std::getenv("PIPESCHED_SOLVER")) saved = v;
  ::unsetenv("PIPESCHED_SOLVER");
  auto flags = quick();
  flags.solver = "/nonexistent/cbc";
  const auto o = cmd_plan(tmp.write("toy.json", scenario_to_json(toy_scenario())), flags);
  if (saved) ::setenv("PIPESCHED_SOLVER", saved->c_str(), 1);
  CHECK(o.exit_code == kExitUsage);
  CHECK(o.summary.find("solver") != std::string::npos);
}

TEST_CASE("compare runs both regimes") {
  TempDir tmp;
  const auto scen = tmp.write("toy.json", scenario_to_json(toy_scenario()));
  const auto real = tmp.write("real.json", R"([
    {"id": "stop", "time": 2.5, "overrides": [{"terminal": "S1", "parameter": "rate_max", "value": 0}]},
    {"id": "start", "time": 12.5, "overrides": [{"terminal": "S1", "parameter": "rate_max", "value": 2}]}])");
  const auto o = cmd_compare(scen, real, BaselineMode::Resume, quick());
  INFO(o.summary);
  REQUIRE(o.exit_code == kExitOk);
  REQUIRE(o.report.has_value());
  CHECK(o.report->aware_makespan == doctest::Approx(20).epsilon(1e-4));
  CHECK(o.report->baseline_makespan == doctest::Approx(20).epsilon(1e-4));

  CHECK(cmd_compare(scen, tmp.file("none.json"), BaselineMode::Resume, quick()).exit_code == kExitUsage);
  CHECK(cmd_compare(scen, tmp.write("junk.json", "{"), BaselineMode::Resume, quick()).exit_code == kExitUsage);
  const auto late = tmp.write("late.json", R"([{"id": "x", "time": 99, "overrides": []}])");
  CHECK(cmd_compare(scen, late, BaselineMode::Resume, quick()).exit_code == kExitDomain);
}

TEST_CASE("dump-model writes MPS and algebra") {
  TempDir tmp;
  const auto scen = tmp.write("toy.json", scenario_to_json(toy_scenario()));
  const auto o = cmd_dump_model(scen, tmp.file("m.mps"), true, Flags{});
  CHECK(o.exit_code == kExitOk);
  CHECK(slurp(tmp.file("m.mps")).find("ENDATA") != std::string::npos);
  CHECK(o.summary.find("free MPS") != std::string::npos);
  CHECK(o.summary.find("eq26_") != std::string::npos);
  CHECK(cmd_dump_model(scen, (tmp.path / "x" / "m.mps").string(), false, Flags{}).exit_code == kExitUsage);
}
