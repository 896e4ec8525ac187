#ifndef PIPESCHED_SOLVER_HPP
#define PIPESCHED_SOLVER_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pipesched/model.hpp"

namespace pipesched {

class SolverError : public std::runtime_error {
 public:
  enum class Kind { BackendNotFound, Crash, UnparsableSolution, InvalidConfig };
  SolverError(Kind kind, const std::string& what, std::string detail = {})
      : std::runtime_error(what), kind_(kind), detail_(std::move(detail)) {}
  Kind kind() const noexcept { return kind_; }
  /// Captured solver stderr or the offending solution text excerpt.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Kind kind_;
  std::string detail_;
};

struct SolverConfig {
  std::string backend = "cbc";
  double time_limit = 600.0;  // seconds
  double mip_gap = 1e-6;
  int threads = 1;
  std::optional<std::string> solver_path;
  /// argv for the external process. Placeholders: {solver} {mps} {solution}
  /// {time_limit} {gap} {threads}. Empty selects the backend's default.
  std::vector<std::string> argv_template;
  bool keep_files = false;
};

enum class SolveStatus { Optimal, Feasible, Infeasible, TimeLimit, Error };
const char* status_name(SolveStatus status);

inline constexpr double kIntegralityTolerance = 1e-5;
inline constexpr double kFeasibilityTolerance = 1e-5;

struct Solution {
  SolveStatus status = SolveStatus::Error;
  double objective = 0.0;
  /// One value per model variable, in declaration order.
  std::vector<double> values;
  /// Variables the solver did not report (defaulted to 0).
  std::vector<std::size_t> defaulted;
  double gap = 0.0;
  double solve_seconds = 0.0;
  std::string log;

  bool has_values() const { return !values.empty(); }
  double value(const ModelInstance& m, const VarRef& ref) const { return values.at(m.index(ref)); }
};

struct MpsOptions {
  bool relax_integrality = false;
  bool force_free = false;
};

struct MpsText {
  std::string text;
  bool free_format = false;
  std::vector<std::string> warnings;
};

/// Fixed-format MPS when every name fits in 8 characters, free format otherwise.
MpsText emit_mps(const ModelInstance& m, const MpsOptions& options = {});

/// Parses a CBC-style solution report ("<status> - objective value <z>" followed
/// by "<index> <name> <value> <reduced cost>" lines).
Solution parse_solution(const std::string& text, const ModelInstance& m);

using BackendFn = std::function<Solution(const ModelInstance&, const SolverConfig&)>;
void register_backend(const std::string& name, BackendFn fn);
bool has_backend(const std::string& name);

/// Path of the external solver executable that `solve` would run, if any.
std::optional<std::string> resolve_solver_path(const SolverConfig& cfg);

Solution solve(const ModelInstance& m, const SolverConfig& cfg = {});

struct ConstraintCheck {
  double max_violation = 0.0;
  std::optional<std::size_t> worst;  // constraint index
  double max_bound_violation = 0.0;
  double max_integrality_violation = 0.0;
};

/// Plugs values into every constraint and bound.
ConstraintCheck check_values(const ModelInstance& m, const std::vector<double>& values);
double evaluate_objective(const ModelInstance& m, const std::vector<double>& values);
/// Objective without the makespan tie-break term.
double evaluate_cost(const ModelInstance& m, const std::vector<double>& values);

}  // namespace pipesched

#endif  // PIPESCHED_SOLVER_HPP
