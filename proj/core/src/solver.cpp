#include "pipesched/solver.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

extern char** environ;

namespace pipesched {

namespace fs = std::filesystem;

const char* status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::TimeLimit: return "TimeLimit";
    case SolveStatus::Error: return "Error";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// MPS emission

namespace {

std::string row_name(const std::string& tag, std::size_t ordinal) { return fmt::format("{}_{}", tag, ordinal); }

std::string number_free(double v) { return fmt::format("{:.17g}", v); }

std::string number_fixed(double v) {
  for (int precision = 12; precision > 0; --precision) {
    std::string s = fmt::format("{:.{}g}", v, precision);
    if (s.size() <= 12) return s;
  }
  return fmt::format("{:.1e}", v);
}

class MpsWriter {
 public:
  MpsWriter(bool fixed, std::ostringstream& out) : fixed_(fixed), out_(out) {}

  void section(const char* name) { out_ << name << '\n'; }

  void row(const char* type, const std::string& name) {
    if (fixed_) {
      out_ << fmt::format(" {:<2} {}\n", type, name);
    } else {
      out_ << ' ' << type << ' ' << name << '\n';
    }
  }

  void entry(const std::string& col, const std::string& row, double value) {
    if (fixed_) {
      out_ << fmt::format("    {:<8}  {:<8}  {:>12}\n", col, row, number_fixed(value));
    } else {
      out_ << "    " << col << ' ' << row << ' ' << number_free(value) << '\n';
    }
  }

  void marker(const char* which) {
    if (fixed_) {
      out_ << fmt::format("    {:<8}  {:<8}  {:>12}   {}\n", "MARKER", "'MARKER'", "", which);
    } else {
      out_ << "    MARKER 'MARKER' " << which << '\n';
    }
  }

  void bound(const char* type, const std::string& col, double value) {
    if (fixed_) {
      out_ << fmt::format(" {:<2} {:<8}  {:<8}  {:>12}\n", type, "BND", col, number_fixed(value));
    } else {
      out_ << ' ' << type << " BND " << col << ' ' << number_free(value) << '\n';
    }
  }

  void free_bound(const char* type, const std::string& col) {
    if (fixed_) {
      out_ << fmt::format(" {:<2} {:<8}  {}\n", type, "BND", col);
    } else {
      out_ << ' ' << type << " BND " << col << '\n';
    }
  }

 private:
  bool fixed_;
  std::ostringstream& out_;
};

}  // namespace

MpsText emit_mps(const ModelInstance& m, const MpsOptions& options) {
  MpsText result;
  const auto& vars = m.variables();
  const auto& cons = m.constraints();

  std::vector<std::string> col_names(vars.size());
  for (std::size_t n = 0; n < vars.size(); ++n) col_names[n] = vars[n].ref.name();
  std::vector<std::string> row_names(cons.size());
  std::map<std::string, std::size_t> ordinal;
  for (std::size_t r = 0; r < cons.size(); ++r) row_names[r] = row_name(cons[r].tag, ++ordinal[cons[r].tag]);

  bool fits = m.name.size() <= 8;
  for (const auto& n : col_names) fits = fits && n.size() <= 8;
  for (const auto& n : row_names) fits = fits && n.size() <= 8;
  result.free_format = options.force_free || !fits;
  if (!fits && !options.force_free) {
    result.warnings.push_back("names exceed 8 characters; emitted free-format MPS");
  }

  // Column-major view of the constraint matrix.
  std::vector<std::vector<std::pair<std::size_t, double>>> columns(vars.size());
  for (std::size_t r = 0; r < cons.size(); ++r) {
    for (const auto& t : cons[r].terms) columns[t.var].emplace_back(r, t.coef);
  }
  std::vector<double> obj(vars.size(), 0.0);
  for (const auto& t : m.objective()) obj[t.var] += t.coef;

  std::ostringstream out;
  MpsWriter w(!result.free_format, out);
  out << "NAME          " << m.name << '\n';
  w.section("ROWS");
  w.row("N", "OBJ");
  for (std::size_t r = 0; r < cons.size(); ++r) {
    const char* type = cons[r].sense == Sense::LessEqual ? "L" : cons[r].sense == Sense::Equal ? "E" : "G";
    w.row(type, row_names[r]);
  }

  w.section("COLUMNS");
  bool in_integer_block = false;
  for (std::size_t n = 0; n < vars.size(); ++n) {
    const bool integer = vars[n].integer && !options.relax_integrality;
    if (integer != in_integer_block) {
      w.marker(integer ? "'INTORG'" : "'INTEND'");
      in_integer_block = integer;
    }
    if (obj[n] != 0.0 || columns[n].empty()) w.entry(col_names[n], "OBJ", obj[n]);
    for (const auto& [r, coef] : columns[n]) w.entry(col_names[n], row_names[r], coef);
  }
  if (in_integer_block) w.marker("'INTEND'");

  w.section("RHS");
  for (std::size_t r = 0; r < cons.size(); ++r) {
    if (cons[r].rhs != 0.0) w.entry("RHS", row_names[r], cons[r].rhs);
  }

  w.section("BOUNDS");
  for (std::size_t n = 0; n < vars.size(); ++n) {
    const auto& v = vars[n];
    if (v.lower == v.upper) {
      w.bound("FX", col_names[n], v.lower);
      continue;
    }
    if (std::isinf(v.lower) && v.lower < 0) {
      w.free_bound("MI", col_names[n]);
    } else if (v.lower != 0.0) {
      w.bound("LO", col_names[n], v.lower);
    }
    if (std::isfinite(v.upper)) w.bound("UP", col_names[n], v.upper);
  }
  out << "ENDATA\n";
  result.text = out.str();
  return result;
}

// ---------------------------------------------------------------------------
// Solution parsing

namespace {

SolveStatus classify(const std::string& header, bool* no_integer_solution) {
  *no_integer_solution = header.find("no integer solution") != std::string::npos;
  if (header.rfind("Optimal", 0) == 0) return SolveStatus::Optimal;
  if (header.rfind("Infeasible", 0) == 0 || header.rfind("Integer infeasible", 0) == 0) return SolveStatus::Infeasible;
  if (header.rfind("Stopped on time", 0) == 0) return SolveStatus::TimeLimit;
  if (header.rfind("Stopped", 0) == 0) return SolveStatus::Feasible;
  if (header.rfind("Unbounded", 0) == 0) return SolveStatus::Error;
  throw SolverError(SolverError::Kind::UnparsableSolution, "unrecognised solution status line 1: '" + header + "'",
                    header);
}

}  // namespace

Solution parse_solution(const std::string& text, const ModelInstance& m) {
  std::unordered_map<std::string, std::size_t> by_name;
  by_name.reserve(m.variables().size());
  for (std::size_t n = 0; n < m.variables().size(); ++n) by_name.emplace(m.variables()[n].ref.name(), n);

  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw SolverError(SolverError::Kind::UnparsableSolution, "empty solution file");
  }
  Solution sol;
  bool no_integer = false;
  sol.status = classify(line, &no_integer);
  if (auto pos = line.find("objective value"); pos != std::string::npos) {
    try {
      sol.objective = std::stod(line.substr(pos + 15));
    } catch (const std::exception&) {
      throw SolverError(SolverError::Kind::UnparsableSolution, "bad objective value on line 1", line);
    }
  }

  std::vector<double> values(m.variables().size(), 0.0);
  std::vector<bool> seen(m.variables().size(), false);
  std::size_t line_no = 1;
  std::size_t last_good = 1;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (!tok.empty() && tok.front() == "**") tok.erase(tok.begin());
    double value = 0.0;
    bool ok = tok.size() >= 3;
    if (ok) {
      try {
        std::size_t used = 0;
        value = std::stod(tok[2], &used);
        ok = used == tok[2].size();
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok) {
      throw SolverError(SolverError::Kind::UnparsableSolution,
                        fmt::format("malformed solution line {} (last good line {})", line_no, last_good), line);
    }
    auto it = by_name.find(tok[1]);
    if (it != by_name.end()) {
      values[it->second] = value;
      seen[it->second] = true;
      any = true;
    }
    last_good = line_no;
  }

  const bool usable = sol.status == SolveStatus::Optimal || sol.status == SolveStatus::Feasible ||
                      (sol.status == SolveStatus::TimeLimit && !no_integer && any);
  if (usable) {
    for (std::size_t n = 0; n < values.size(); ++n) {
      if (!seen[n]) sol.defaulted.push_back(n);
      if (m.variables()[n].integer) {
        const double r = std::round(values[n]);
        if (std::abs(values[n] - r) <= kIntegralityTolerance) values[n] = r;
      }
    }
    sol.values = std::move(values);
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Backends

namespace {

std::mutex& registry_mutex() {
  static std::mutex mu;
  return mu;
}

std::map<std::string, BackendFn>& registry() {
  static std::map<std::string, BackendFn> backends;
  return backends;
}

bool executable(const fs::path& p) { return !p.empty() && ::access(p.c_str(), X_OK) == 0 && fs::is_regular_file(p); }

std::optional<std::string> search_path(const std::string& name) {
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  std::stringstream dirs(path);
  for (std::string dir; std::getline(dirs, dir, ':');) {
    fs::path candidate = fs::path(dir.empty() ? "." : dir) / name;
    if (executable(candidate)) return candidate.string();
  }
  return std::nullopt;
}

fs::path make_work_dir() {
  static std::atomic<unsigned> counter{0};
  thread_local std::mt19937_64 rng{std::random_device{}()};
  for (int attempt = 0; attempt < 16; ++attempt) {
    fs::path dir = fs::temp_directory_path() /
                   fmt::format("pipesched-{}-{}-{:x}", ::getpid(), counter.fetch_add(1), rng() & 0xffffffu);
    std::error_code ec;
    if (fs::create_directory(dir, ec)) return dir;
  }
  throw SolverError(SolverError::Kind::Crash, "cannot create a temporary directory for the solver");
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_process(const std::vector<std::string>& argv, const fs::path& out_path, const fs::path& err_path) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) return -1000 - rc;
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return -1;
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return -WTERMSIG(status);
  return -1;
}

std::string substitute(std::string arg, const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    const std::string needle = "{" + key + "}";
    for (auto pos = arg.find(needle); pos != std::string::npos; pos = arg.find(needle, pos + value.size())) {
      arg.replace(pos, needle.size(), value);
    }
  }
  return arg;
}

double parse_gap(const std::string& log) {
  // CBC summary: "Gap:                            0.00"
  auto pos = log.rfind("Gap:");
  if (pos == std::string::npos) return 0.0;
  try {
    return std::stod(log.substr(pos + 4));
  } catch (const std::exception&) {
    return 0.0;
  }
}

Solution solve_cbc(const ModelInstance& m, const SolverConfig& cfg) {
  auto solver = resolve_solver_path(cfg);
  if (!solver) {
    throw SolverError(SolverError::Kind::BackendNotFound,
                      "CBC executable not found (set PIPESCHED_SOLVER or SolverConfig::solver_path)");
  }
  const fs::path dir = make_work_dir();
  const fs::path mps = dir / "model.mps";
  const fs::path sol_path = dir / "model.sol";
  const fs::path out_path = dir / "solver.out";
  const fs::path err_path = dir / "solver.err";
  {
    std::ofstream out(mps);
    out << emit_mps(m).text;
  }

  std::vector<std::string> tmpl = cfg.argv_template;
  if (tmpl.empty()) {
    tmpl = {"{solver}", "{mps}",   "-timeMode", "elapsed", "-sec",  "{time_limit}", "-ratioGap",
            "{gap}",    "-threads", "{threads}", "-solve",  "-solu", "{solution}"};
  }
  const std::map<std::string, std::string> vars = {
      {"solver", *solver},          {"mps", mps.string()},
      {"solution", sol_path.string()}, {"time_limit", fmt::format("{:g}", cfg.time_limit)},
      {"gap", fmt::format("{:g}", cfg.mip_gap)}, {"threads", fmt::format("{}", cfg.threads)}};
  std::vector<std::string> argv;
  for (const auto& a : tmpl) argv.push_back(substitute(a, vars));

  const auto t0 = std::chrono::steady_clock::now();
  const int rc = run_process(argv, out_path, err_path);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string log = read_file(out_path);
  const std::string err = read_file(err_path);
  auto cleanup = [&] {
    if (!cfg.keep_files) {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  };
  if (rc != 0 || !fs::exists(sol_path)) {
    cleanup();
    throw SolverError(SolverError::Kind::Crash,
                      fmt::format("solver exited with status {} without a solution file", rc),
                      err.empty() ? log : err);
  }
  Solution sol;
  try {
    sol = parse_solution(read_file(sol_path), m);
  } catch (...) {
    cleanup();
    throw;
  }
  cleanup();
  sol.solve_seconds = seconds;
  sol.log = log;
  sol.gap = parse_gap(log);
  return sol;
}

void ensure_builtin_backends() {
  static std::once_flag once;
  std::call_once(once, [] { registry().emplace("cbc", solve_cbc); });
}

}  // namespace

void register_backend(const std::string& name, BackendFn fn) {
  ensure_builtin_backends();
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(fn);
}

bool has_backend(const std::string& name) {
  ensure_builtin_backends();
  std::lock_guard lock(registry_mutex());
  return registry().count(name) > 0;
}

std::optional<std::string> resolve_solver_path(const SolverConfig& cfg) {
  if (const char* env = std::getenv("PIPESCHED_SOLVER"); env && *env) {
    if (executable(env)) return std::string(env);
    return search_path(env);
  }
  if (cfg.solver_path) {
    if (executable(*cfg.solver_path)) return *cfg.solver_path;
    return search_path(*cfg.solver_path);
  }
#ifdef PIPESCHED_DEFAULT_SOLVER
  if (executable(PIPESCHED_DEFAULT_SOLVER)) return std::string(PIPESCHED_DEFAULT_SOLVER);
#endif
  return search_path("cbc");
}

Solution solve(const ModelInstance& m, const SolverConfig& cfg) {
  if (cfg.time_limit <= 0) throw SolverError(SolverError::Kind::InvalidConfig, "time_limit must be positive");
  if (cfg.mip_gap < 0) throw SolverError(SolverError::Kind::InvalidConfig, "mip_gap must be non-negative");
  ensure_builtin_backends();
  BackendFn fn;
  {
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(cfg.backend);
    if (it == registry().end()) {
      throw SolverError(SolverError::Kind::BackendNotFound, "unknown solver backend '" + cfg.backend + "'");
    }
    fn = it->second;
  }
  Solution sol = fn(m, cfg);
  if (sol.has_values()) {
    // Solvers stopped mid-search sometimes report a point that is not feasible.
    const auto chk = check_values(m, sol.values);
    double scale = 1.0;
    if (chk.worst) {
      const auto& c = m.constraints()[*chk.worst];
      scale += std::abs(c.rhs);
      for (const auto& t : c.terms) scale += std::abs(t.coef * sol.values[t.var]);
    }
    if (chk.max_violation > kFeasibilityTolerance * scale || chk.max_bound_violation > kFeasibilityTolerance * 10 ||
        chk.max_integrality_violation > kIntegralityTolerance) {
      sol.log += fmt::format("\nreported point rejected: violation {:g} in {}\n", chk.max_violation,
                             chk.worst ? m.constraints()[*chk.worst].tag : std::string("bounds"));
      sol.values.clear();
      sol.defaulted.clear();
      if (sol.status == SolveStatus::Optimal || sol.status == SolveStatus::Feasible) sol.status = SolveStatus::Error;
    }
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Generic evaluation

ConstraintCheck check_values(const ModelInstance& m, const std::vector<double>& values) {
  ConstraintCheck out;
  const auto& cons = m.constraints();
  for (std::size_t r = 0; r < cons.size(); ++r) {
    double lhs = 0.0;
    for (const auto& t : cons[r].terms) lhs += t.coef * values.at(t.var);
    double viol = 0.0;
    switch (cons[r].sense) {
      case Sense::LessEqual: viol = lhs - cons[r].rhs; break;
      case Sense::GreaterEqual: viol = cons[r].rhs - lhs; break;
      case Sense::Equal: viol = std::abs(lhs - cons[r].rhs); break;
    }
    if (viol > out.max_violation) {
      out.max_violation = viol;
      out.worst = r;
    }
  }
  const auto& vars = m.variables();
  for (std::size_t n = 0; n < vars.size(); ++n) {
    const double v = values.at(n);
    out.max_bound_violation = std::max({out.max_bound_violation, vars[n].lower - v, v - vars[n].upper});
    if (vars[n].integer) {
      out.max_integrality_violation = std::max(out.max_integrality_violation, std::abs(v - std::round(v)));
    }
  }
  return out;
}

double evaluate_objective(const ModelInstance& m, const std::vector<double>& values) {
  double z = 0.0;
  for (const auto& t : m.objective()) z += t.coef * values.at(t.var);
  return z;
}

double evaluate_cost(const ModelInstance& m, const std::vector<double>& values) {
  double z = evaluate_objective(m, values);
  if (m.tie_break != 0.0 && m.makespan_var) z -= m.tie_break * values.at(*m.makespan_var);
  return z;
}

}  // namespace pipesched
