#ifndef PIPESCHED_MODEL_HPP
#define PIPESCHED_MODEL_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pipesched/scenario.hpp"

namespace pipesched {

/// Variable families of the pipeline MILP.
///
/// Index conventions (all 1-based; run index 0 denotes the initial state):
///   C,L,PC: (k)        LS: (k,s)          Q,v: (i,s,k)        QP: (i,s,p,k)
///   D,x: (i,j,k)       DP: (i,j,p,k)      F,W: (i,k)          B: (p,j)
///   RC: (i)            NP,y: (i,p)        b: (k,e)            BC: ()
enum class VarKind : std::uint8_t {
  C, L, LS, Q, QP, D, DP, F, W, B, RC, PC, BC, NP, v, x, y, b
};

const char* kind_name(VarKind kind);
bool is_binary_kind(VarKind kind);

struct VarRef {
  VarKind kind = VarKind::C;
  std::array<int, 4> idx{0, 0, 0, 0};

  static VarRef make(VarKind kind, std::initializer_list<int> indices);
  std::size_t arity() const;
  /// Deterministic MPS-safe name, e.g. "QP_3_1_2_4".
  std::string name() const;

  friend bool operator==(const VarRef&, const VarRef&) = default;
  friend auto operator<=>(const VarRef&, const VarRef&) = default;
};

struct VarRefHash {
  std::size_t operator()(const VarRef& r) const noexcept;
};

struct Variable {
  VarRef ref;
  double lower = 0.0;
  double upper = 0.0;
  bool integer = false;
};

struct Term {
  std::size_t var = 0;
  double coef = 0.0;
};

enum class Sense : std::uint8_t { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
  std::vector<Term> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
  std::string tag;  // constraint family, e.g. "eq11"
};

struct BigM {
  double time = 0.0;    // M_T
  double volume = 0.0;  // M_vol
  double count = 0.0;   // M_count
};

/// Constraint family tags the builder may emit.
const std::vector<std::string>& constraint_families();

class ModelInstance {
 public:
  std::size_t add_variable(VarRef ref, double lower, double upper, bool integer = false);
  void add_constraint(LinearConstraint c);

  std::optional<std::size_t> find(const VarRef& ref) const;
  /// Index of a declared variable; throws std::out_of_range when missing.
  std::size_t index(const VarRef& ref) const;

  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const std::vector<LinearConstraint>& constraints() const noexcept { return constraints_; }
  const std::vector<Term>& objective() const noexcept { return objective_; }
  std::vector<Term>& objective() noexcept { return objective_; }

  BigM big_m;
  /// Coefficient of the makespan tie-break term in the objective (0 when off).
  double tie_break = 0.0;
  std::optional<std::size_t> makespan_var;
  std::string name = "PIPESCHED";

 private:
  std::vector<Variable> variables_;
  std::vector<LinearConstraint> constraints_;
  std::vector<Term> objective_;
  std::unordered_map<VarRef, std::size_t, VarRefHash> lookup_;
};

struct BuildOptions {
  /// Adds eps * C_|K| to the objective to pick the shortest cost-optimal plan.
  bool tie_break = false;
  /// Skips families the formulation does not state (supply bounds).
  bool paper_fidelity = false;
  /// Multiplier on M_vol, used to check that the big-M choice is non-binding.
  double m_vol_scale = 1.0;
  /// Fixes unreachable injection/delivery flags and adds valid inequalities.
  bool reductions = false;
  /// false drops the run-to-interval assignment (b, eq3-eq5) and reads every
  /// timeline at interval 1. Requires a scenario with a single interval.
  bool event_mechanism = true;
};

BigM big_m_values(const Scenario& s);

/// Assembles the full MILP for a validated scenario.
ModelInstance build_model(const Scenario& s, const BuildOptions& options = {});

struct ModelStats {
  std::map<std::string, std::size_t> constraints_per_tag;
  std::map<std::string, std::size_t> variables_per_kind;
  std::size_t variables = 0;
  std::size_t binaries = 0;
  std::size_t constraints = 0;
  std::size_t nonzeros = 0;
};

ModelStats model_stats(const ModelInstance& m);
std::string format_stats(const ModelStats& stats);

/// Human-readable dump: one "tag_n: a*x + ... <= rhs" line per constraint.
std::string to_algebraic(const ModelInstance& m);

}  // namespace pipesched

#endif  // PIPESCHED_MODEL_HPP
