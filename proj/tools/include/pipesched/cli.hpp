#ifndef PIPESCHED_CLI_HPP
#define PIPESCHED_CLI_HPP

#include <optional>
#include <string>

#include "pipesched/replanner.hpp"

namespace pipesched::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;  // infeasible, invalid scenario, verification failed
inline constexpr int kExitUsage = 2;   // bad arguments, unreadable or malformed files

struct Flags {
  std::optional<std::string> solver;  // CBC-compatible executable
  double time_limit = 600.0;          // seconds per solve
  double gap = 1e-6;
  bool tie_break = false;
  std::optional<std::string> out;  // schedule JSON
  std::optional<std::string> svg;
};

struct CommandOutcome {
  int exit_code = kExitOk;
  std::string summary;  // human-readable, two-decimal figures
  std::string json;     // full precision
};

struct PlanOutcome : CommandOutcome {
  PlanResult plan;
};

struct CompareOutcome : CommandOutcome {
  PlanResult aware;
  BaselineResult baseline;
  std::optional<ComparisonReport> report;
};

/// Plans already solved elsewhere; cmd_compare skips the matching solve.
struct CompareInputs {
  const PlanResult* nominal = nullptr;
  const PlanResult* aware = nullptr;
};

PlanOptions plan_options(const Flags& flags);

CommandOutcome cmd_validate(const std::string& scenario_path);
PlanOutcome cmd_plan(const std::string& scenario_path, const Flags& flags);
CommandOutcome cmd_verify(const std::string& scenario_path, const std::string& schedule_path);
CompareOutcome cmd_compare(const std::string& scenario_path, const std::string& realization_path, BaselineMode mode,
                           const Flags& flags, const CompareInputs& inputs = {});
CommandOutcome cmd_dump_model(const std::string& scenario_path, const std::optional<std::string>& mps_path,
                              bool algebraic, const Flags& flags);

}  // namespace pipesched::cli

#endif  // PIPESCHED_CLI_HPP
