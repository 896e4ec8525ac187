#ifndef PIPESCHED_SCENARIO_HPP
#define PIPESCHED_SCENARIO_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pipesched {

/// Raised when a scenario document cannot be parsed or violates the schema.
/// `where()` names the offending field path or the line/column of a parse error.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what),
        where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// Value of one parameter over every event interval (T_{e-1}, T_e].
///
/// Interval e (1-based, e >= 1) is stored at position e - 1. A scenario with
/// |E| events therefore carries timelines of length |E| - 1.
class EventTimeline {
 public:
  EventTimeline() = default;
  explicit EventTimeline(std::vector<double> values) : values_(std::move(values)) {}
  static EventTimeline constant(double value, std::size_t intervals) {
    return EventTimeline(std::vector<double>(intervals, value));
  }

  /// Value on interval e. Throws std::out_of_range for e == 0 or e > size().
  double at(std::size_t e) const;

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }
  double max() const;
  double min() const;

  friend bool operator==(const EventTimeline&, const EventTimeline&) = default;

 private:
  std::vector<double> values_;
};

/// A^<e>: the value of a timeline on the interval ending at event e.
inline double param_at(const EventTimeline& timeline, std::size_t e) {
  return timeline.at(e);
}

struct Product {
  std::string id;
  std::string name;
  friend bool operator==(const Product&, const Product&) = default;
};

struct SourceTerminal {
  std::string id;
  double tau = 0.0;
  EventTimeline rate_min;
  EventTimeline rate_max;
  std::map<std::string, double> pump_cost;
  std::map<std::string, double> supply_min;
  std::map<std::string, double> supply_max;
  friend bool operator==(const SourceTerminal&, const SourceTerminal&) = default;
};

struct OutputTerminal {
  std::string id;
  double sigma = 0.0;
  std::map<std::string, double> demand_min;
  std::map<std::string, double> demand_max;
  std::map<std::string, double> backorder_cost;
  EventTimeline delivery_min;
  EventTimeline delivery_max;
  friend bool operator==(const OutputTerminal&, const OutputTerminal&) = default;
};

struct Event {
  std::string id;
  double time = 0.0;
  std::string label;
  friend bool operator==(const Event&, const Event&) = default;
};

struct OldBatch {
  std::string id;
  std::string product;
  double volume0 = 0.0;
  friend bool operator==(const OldBatch&, const OldBatch&) = default;
};

/// One position in the fixed batch order. Index 0 is the far end of the line;
/// larger indices sit nearer the origin.
struct BatchSlot {
  enum class Kind { Old, New };
  Kind kind = Kind::New;
  std::size_t old_index = 0;  // into Scenario::old_batches when kind == Old
  friend bool operator==(const BatchSlot&, const BatchSlot&) = default;
};

struct Scenario {
  std::string name;
  std::vector<std::string> comment;
  double pipeline_volume = 0.0;
  double horizon = 0.0;
  std::vector<Product> products;
  std::vector<SourceTerminal> sources;
  std::vector<OutputTerminal> depots;  // ascending sigma
  std::vector<OldBatch> old_batches;   // far end first
  std::vector<Event> events;
  std::map<std::pair<std::string, std::string>, double> interface_cost;
  std::vector<std::pair<std::string, std::string>> forbidden_pairs;
  double batch_size_min = 0.0;
  double batch_size_max = 0.0;
  std::size_t run_count = 1;
  std::size_t new_batch_count = 0;
  /// Explicit batch order; empty means "old batches, then all new slots at the origin".
  std::vector<BatchSlot> layout;

  std::size_t interval_count() const noexcept { return events.empty() ? 0 : events.size() - 1; }

  /// The effective slot order (explicit layout or the default).
  std::vector<BatchSlot> slots() const;

  std::optional<std::size_t> product_index(std::string_view id) const;
  std::optional<std::size_t> source_index(std::string_view id) const;
  std::optional<std::size_t> depot_index(std::string_view id) const;

  double interface_cost_of(const std::string& ahead, const std::string& behind) const;
  bool is_forbidden(const std::string& ahead, const std::string& behind) const;

  double demand_min(const std::string& product, std::size_t depot) const;
  double demand_max(const std::string& product, std::size_t depot) const;
  double backorder_cost(const std::string& product, std::size_t depot) const;
  double pump_cost(const std::string& product, std::size_t source) const;

  /// Largest per-run delivery bound over all depots and intervals (D_max).
  double delivery_bound() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Volume tolerance used for scenario-level checks (1e-6 of the line volume).
inline double volume_epsilon(const Scenario& s) { return 1e-6 * s.pipeline_volume; }

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(std::string_view json_text, const std::string& source_name = "<string>");
std::string scenario_to_json(const Scenario& s);
void save_scenario(const Scenario& s, const std::string& path);

struct Violation {
  std::string field;
  std::string message;
};

/// Checks every structural invariant. An empty result means the scenario is valid.
std::vector<Violation> validate(const Scenario& s);

}  // namespace pipesched

#endif  // PIPESCHED_SCENARIO_HPP
