#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "pipesched/cli.hpp"

using namespace pipesched;

namespace {

void add_solver_flags(CLI::App* cmd, cli::Flags& flags) {
  cmd->add_option("--solver", flags.solver, "CBC-compatible solver executable (default: PIPESCHED_SOLVER or bundled CBC)");
  cmd->add_option("--time-limit", flags.time_limit, "wall-clock limit per solve, seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--gap", flags.gap, "relative MIP gap")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_flag("--tie-break", flags.tie_break, "prefer the shortest makespan among cost-optimal plans");
}

int emit(const cli::CommandOutcome& o, bool as_json) {
  auto& stream = o.exit_code == cli::kExitOk ? std::cout : std::cerr;
  if (as_json) {
    std::cout << o.json << "\n";
  } else {
    stream << o.summary;
    if (!o.summary.empty() && o.summary.back() != '\n') stream << "\n";
  }
  return o.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-aware MILP scheduling for single-line multi-source pipelines"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "print machine-readable JSON instead of the summary");

  cli::Flags flags;
  std::string scenario;

  auto* validate_cmd = app.add_subcommand("validate", "check a scenario file");
  validate_cmd->add_option("scenario", scenario, "scenario JSON")->required();

  auto* plan_cmd = app.add_subcommand("plan", "solve, verify and write a schedule");
  plan_cmd->add_option("scenario", scenario, "scenario JSON")->required();
  add_solver_flags(plan_cmd, flags);
  plan_cmd->add_option("--out", flags.out, "schedule JSON output");
  plan_cmd->add_option("--svg", flags.svg, "Gantt chart SVG output");

  std::string schedule;
  auto* verify_cmd = app.add_subcommand("verify", "replay a schedule against a scenario");
  verify_cmd->add_option("scenario", scenario, "scenario JSON")->required();
  verify_cmd->add_option("schedule", schedule, "schedule JSON")->required();

  std::string realizations;
  std::string baseline = "resume";
  auto* compare_cmd = app.add_subcommand("compare", "event-aware plan versus the reactive baseline");
  compare_cmd->add_option("scenario", scenario, "event-free scenario JSON")->required();
  compare_cmd->add_option("realizations", realizations, "realization JSON")->required();
  compare_cmd->add_option("--baseline", baseline, "reactive baseline flavour")
      ->check(CLI::IsMember({"resume", "resolve"}))
      ->capture_default_str();
  add_solver_flags(compare_cmd, flags);

  std::optional<std::string> mps;
  bool algebraic = false;
  auto* dump_cmd = app.add_subcommand("dump-model", "write the MILP as MPS or readable algebra");
  dump_cmd->add_option("scenario", scenario, "scenario JSON")->required();
  dump_cmd->add_option("--mps", mps, "MPS output file");
  dump_cmd->add_flag("--algebraic", algebraic, "print every constraint with its family tag");
  dump_cmd->add_flag("--tie-break", flags.tie_break, "include the makespan tie-break term");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitUsage;
  }

  try {
    if (*validate_cmd) return emit(cli::cmd_validate(scenario), as_json);
    if (*plan_cmd) return emit(cli::cmd_plan(scenario, flags), as_json);
    if (*verify_cmd) return emit(cli::cmd_verify(scenario, schedule), as_json);
    if (*compare_cmd) {
      return emit(cli::cmd_compare(scenario, realizations, parse_baseline_mode(baseline), flags), as_json);
    }
    if (*dump_cmd) return emit(cli::cmd_dump_model(scenario, mps, algebraic, flags), as_json);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitDomain;
  }
  return cli::kExitUsage;
}
