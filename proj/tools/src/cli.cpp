#include "pipesched/cli.hpp"

#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace pipesched::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class Outcome>
Outcome fail(int code, std::string message) {
  Outcome o;
  o.exit_code = code;
  o.summary = std::move(message);
  o.json = json{{"ok", false}, {"error", o.summary}}.dump(2);
  return o;
}

// Reads and parses a scenario. Unreadable or malformed files are usage errors,
// schema violations are domain failures.
template <class Outcome>
std::optional<Outcome> load(const std::string& path, Scenario& out) {
  if (!fs::is_regular_file(path)) return fail<Outcome>(kExitUsage, "cannot read scenario file '" + path + "'");
  try {
    out = load_scenario(path);
  } catch (const ScenarioError& e) {
    return fail<Outcome>(kExitUsage, std::string("malformed scenario: ") + e.what());
  }
  const auto violations = validate(out);
  if (violations.empty()) return std::nullopt;
  Outcome o;
  o.exit_code = kExitDomain;
  json list = json::array();
  std::ostringstream os;
  os << fmt::format("{}: {} violation(s)\n", path, violations.size());
  for (const auto& v : violations) {
    os << fmt::format("  {}: {}\n", v.field, v.message);
    list.push_back({{"field", v.field}, {"message", v.message}});
  }
  o.summary = os.str();
  o.json = json{{"ok", false}, {"violations", list}}.dump(2);
  return o;
}

int solver_error_code(const SolverError& e) {
  return e.kind() == SolverError::Kind::BackendNotFound || e.kind() == SolverError::Kind::InvalidConfig ? kExitUsage
                                                                                                         : kExitDomain;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  return static_cast<bool>(out);
}

json stats_json(const ModelStats& st) {
  return {{"variables", st.variables},
          {"binaries", st.binaries},
          {"constraints", st.constraints},
          {"nonzeros", st.nonzeros},
          {"constraints_per_tag", st.constraints_per_tag}};
}

std::string status_line(const PlanResult& p) {
  std::string line = fmt::format("status {}  objective {:.2f}  solve {:.1f} s", status_name(p.status), p.objective,
                                 p.seconds);
  if (p.status != SolveStatus::Optimal && p.has_schedule()) line += fmt::format("  (not proven optimal, gap {:.4g})", p.gap);
  return line + "\n";
}

}  // namespace

PlanOptions plan_options(const Flags& flags) {
  PlanOptions opt;
  opt.build.tie_break = flags.tie_break;
  opt.solver.time_limit = flags.time_limit;
  opt.solver.mip_gap = flags.gap;
  if (flags.solver) opt.solver.solver_path = *flags.solver;
  return opt;
}

CommandOutcome cmd_validate(const std::string& scenario_path) {
  Scenario s;
  if (auto err = load<CommandOutcome>(scenario_path, s)) return *err;
  CommandOutcome o;
  o.summary = fmt::format("{}: valid ({} products, {} sources, {} depots, {} slots, {} runs, {} event intervals)\n",
                          scenario_path, s.products.size(), s.sources.size(), s.depots.size(), s.slots().size(),
                          s.run_count, s.interval_count());
  o.json = json{{"ok", true}, {"violations", json::array()}}.dump(2);
  return o;
}

PlanOutcome cmd_plan(const std::string& scenario_path, const Flags& flags) {
  Scenario s;
  if (auto err = load<PlanOutcome>(scenario_path, s)) return *err;
  PlanOutcome o;
  try {
    o.plan = plan_event_aware(s, plan_options(flags));
  } catch (const SolverError& e) {
    return fail<PlanOutcome>(solver_error_code(e), std::string("solver: ") + e.what());
  }
  const PlanResult& p = o.plan;
  json j{{"status", status_name(p.status)},
         {"objective", p.objective},
         {"gap", p.gap},
         {"solve_seconds", p.seconds},
         {"verified", p.verified()},
         {"model", stats_json(p.stats)}};

  if (!p.has_schedule()) {
    o.exit_code = kExitDomain;
    o.summary = status_line(p) + p.message + "\n" + format_stats(p.stats);
    j["ok"] = false;
    o.json = j.dump(2);
    return o;
  }
  j["makespan"] = p.schedule.runs.empty() ? 0.0 : makespan(p.schedule);
  j["schedule"] = json::parse(schedule_to_json(p.schedule));
  j["verification"] = json::parse(p.report.to_json());
  if (!p.verified()) {
    o.exit_code = kExitDomain;
    o.summary = status_line(p) + "schedule failed verification; nothing written\n" + p.report.to_text();
    j["ok"] = false;
    o.json = j.dump(2);
    return o;
  }
  o.summary = status_line(p) + render_text(p.schedule, s);
  if (flags.out && !write_file(*flags.out, schedule_to_json(p.schedule))) {
    return fail<PlanOutcome>(kExitUsage, "cannot write '" + *flags.out + "'");
  }
  if (flags.svg && !write_file(*flags.svg, render_svg(p.schedule, s))) {
    return fail<PlanOutcome>(kExitUsage, "cannot write '" + *flags.svg + "'");
  }
  j["ok"] = true;
  o.json = j.dump(2);
  return o;
}

CommandOutcome cmd_verify(const std::string& scenario_path, const std::string& schedule_path) {
  Scenario s;
  if (auto err = load<CommandOutcome>(scenario_path, s)) return *err;
  if (!fs::is_regular_file(schedule_path)) {
    return fail<CommandOutcome>(kExitUsage, "cannot read schedule file '" + schedule_path + "'");
  }
  Schedule sch;
  try {
    std::ifstream in(schedule_path);
    std::stringstream buf;
    buf << in.rdbuf();
    sch = schedule_from_json(buf.str());
  } catch (const std::runtime_error& e) {
    return fail<CommandOutcome>(kExitUsage, e.what());
  }
  const auto rep = simulate(sch, s);
  CommandOutcome o;
  o.exit_code = rep.passed ? kExitOk : kExitDomain;
  o.summary = rep.to_text();
  o.json = rep.to_json();
  return o;
}

CompareOutcome cmd_compare(const std::string& scenario_path, const std::string& realization_path, BaselineMode mode,
                           const Flags& flags, const CompareInputs& inputs) {
  Scenario base;
  if (auto err = load<CompareOutcome>(scenario_path, base)) return *err;
  if (!fs::is_regular_file(realization_path)) {
    return fail<CompareOutcome>(kExitUsage, "cannot read realization file '" + realization_path + "'");
  }
  std::vector<Realization> realizations;
  Scenario realized;
  try {
    realizations = load_realizations(realization_path);
  } catch (const ScenarioError& e) {
    return fail<CompareOutcome>(kExitUsage, std::string("malformed realizations: ") + e.what());
  }
  try {
    realized = apply_realizations(base, realizations);
  } catch (const ScenarioError& e) {
    return fail<CompareOutcome>(kExitDomain, e.what());
  }

  const PlanOptions opt = plan_options(flags);
  CompareOutcome o;
  try {
    std::future<PlanResult> aware;
    std::future<PlanResult> nominal;
    if (!inputs.aware) aware = std::async(std::launch::async, [&] { return plan_event_aware(realized, opt); });
    if (!inputs.nominal) nominal = std::async(std::launch::async, [&] { return plan(base, opt); });
    o.aware = inputs.aware ? *inputs.aware : aware.get();
    const PlanResult blind = inputs.nominal ? *inputs.nominal : nominal.get();
    o.baseline = plan_reactive_baseline(base, realizations, mode, opt, &blind);
  } catch (const SolverError& e) {
    return fail<CompareOutcome>(solver_error_code(e), std::string("solver: ") + e.what());
  }

  if (!o.aware.has_schedule() || o.baseline.schedule.runs.empty()) {
    o.exit_code = kExitDomain;
    std::ostringstream os;
    os << "event-aware: " << status_line(o.aware);
    if (!o.aware.message.empty()) os << "  " << o.aware.message << "\n";
    os << "reactive: " << status_line(o.baseline.nominal);
    for (const auto& line : o.baseline.log) os << "  " << line << "\n";
    o.summary = os.str();
    o.json = json{{"ok", false}, {"log", o.baseline.log}}.dump(2);
    return o;
  }
  o.report = compare(o.aware, o.baseline, realized);
  o.exit_code = o.report->aware_verified && o.report->baseline_verified ? kExitOk : kExitDomain;
  o.summary = o.report->to_text();
  if (!o.baseline.report.passed) o.summary += "reactive schedule checks:\n" + o.baseline.report.to_text();
  json j = json::parse(o.report->to_json());
  j["ok"] = o.exit_code == kExitOk;
  j["aware_status"] = status_name(o.aware.status);
  j["nominal_status"] = status_name(o.baseline.nominal.status);
  o.json = j.dump(2);
  return o;
}

CommandOutcome cmd_dump_model(const std::string& scenario_path, const std::optional<std::string>& mps_path,
                              bool algebraic, const Flags& flags) {
  Scenario s;
  if (auto err = load<CommandOutcome>(scenario_path, s)) return *err;
  const auto m = build_model(s, plan_options(flags).build);
  const auto st = model_stats(m);
  CommandOutcome o;
  o.summary = format_stats(st);
  json j{{"ok", true}, {"model", stats_json(st)}};
  if (mps_path) {
    const auto mps = emit_mps(m);
    if (!write_file(*mps_path, mps.text)) return fail<CommandOutcome>(kExitUsage, "cannot write '" + *mps_path + "'");
    o.summary += fmt::format("wrote {} ({} MPS)\n", *mps_path, mps.free_format ? "free" : "fixed");
    for (const auto& w : mps.warnings) o.summary += "warning: " + w + "\n";
    j["mps"] = *mps_path;
  }
  if (algebraic) o.summary += to_algebraic(m);
  o.json = j.dump(2);
  return o;
}

}  // namespace pipesched::cli
