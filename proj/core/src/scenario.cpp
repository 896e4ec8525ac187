#include "pipesched/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace pipesched {

using nlohmann::json;

double EventTimeline::at(std::size_t e) const {
  if (e == 0 || e > values_.size()) {
    throw std::out_of_range(
        fmt::format("event interval {} out of range [1, {}]", e, values_.size()));
  }
  return values_[e - 1];
}

double EventTimeline::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double EventTimeline::min() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

std::vector<BatchSlot> Scenario::slots() const {
  if (!layout.empty()) return layout;
  std::vector<BatchSlot> out;
  out.reserve(old_batches.size() + new_batch_count);
  for (std::size_t i = 0; i < old_batches.size(); ++i) out.push_back({BatchSlot::Kind::Old, i});
  for (std::size_t i = 0; i < new_batch_count; ++i) out.push_back({BatchSlot::Kind::New, 0});
  return out;
}

namespace {

template <typename T>
std::optional<std::size_t> find_id(const std::vector<T>& items, std::string_view id) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].id == id) return i;
  }
  return std::nullopt;
}

double lookup(const std::map<std::string, double>& m, const std::string& key, double fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

}  // namespace

std::optional<std::size_t> Scenario::product_index(std::string_view id) const {
  return find_id(products, id);
}
std::optional<std::size_t> Scenario::source_index(std::string_view id) const {
  return find_id(sources, id);
}
std::optional<std::size_t> Scenario::depot_index(std::string_view id) const {
  return find_id(depots, id);
}

double Scenario::interface_cost_of(const std::string& ahead, const std::string& behind) const {
  auto it = interface_cost.find({ahead, behind});
  return it == interface_cost.end() ? 0.0 : it->second;
}

bool Scenario::is_forbidden(const std::string& ahead, const std::string& behind) const {
  return std::find(forbidden_pairs.begin(), forbidden_pairs.end(),
                   std::make_pair(ahead, behind)) != forbidden_pairs.end();
}

double Scenario::demand_min(const std::string& product, std::size_t depot) const {
  return lookup(depots.at(depot).demand_min, product, 0.0);
}
double Scenario::demand_max(const std::string& product, std::size_t depot) const {
  return lookup(depots.at(depot).demand_max, product, 0.0);
}
double Scenario::backorder_cost(const std::string& product, std::size_t depot) const {
  return lookup(depots.at(depot).backorder_cost, product, 0.0);
}
double Scenario::pump_cost(const std::string& product, std::size_t source) const {
  return lookup(sources.at(source).pump_cost, product, 0.0);
}

double Scenario::delivery_bound() const {
  double bound = 0.0;
  for (const auto& d : depots) bound = std::max(bound, d.delivery_max.max());
  return bound;
}

// ---------------------------------------------------------------------------
// JSON ingestion

namespace {

class Reader {
 public:
  explicit Reader(const json& root) : root_(root) {}

  const json& require(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) throw ScenarioError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ScenarioError(join(path, key), "required field is missing");
    return *it;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  static double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ScenarioError(path, "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ScenarioError(path, "expected a finite number");
    return d;
  }

  static std::string string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ScenarioError(path, "expected a string");
    return v.get<std::string>();
  }

  static std::size_t count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ScenarioError(path, "expected a non-negative integer");
    }
    return static_cast<std::size_t>(v.get<long long>());
  }

  static const json& array(const json& v, const std::string& path) {
    if (!v.is_array()) throw ScenarioError(path, "expected an array");
    return v;
  }

  static std::map<std::string, double> product_map(const json& v, const std::string& path) {
    if (!v.is_object()) throw ScenarioError(path, "expected an object keyed by product id");
    std::map<std::string, double> out;
    for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = number(it.value(), path + "." + it.key());
    return out;
  }

  static EventTimeline timeline(const json& v, std::size_t intervals, const std::string& path) {
    if (v.is_number()) return EventTimeline::constant(number(v, path), intervals);
    if (!v.is_array()) throw ScenarioError(path, "expected a number or an array of per-interval values");
    if (v.size() != intervals) {
      throw ScenarioError(path, fmt::format("expected {} per-interval values (|events| - 1), got {}",
                                            intervals, v.size()));
    }
    std::vector<double> values;
    for (std::size_t i = 0; i < v.size(); ++i) values.push_back(number(v[i], fmt::format("{}[{}]", path, i)));
    return EventTimeline(std::move(values));
  }

 private:
  const json& root_;
};

Scenario from_json(const json& root) {
  Reader r(root);
  if (!root.is_object()) throw ScenarioError("", "scenario document must be a JSON object");
  Scenario s;
  if (auto it = root.find("name"); it != root.end()) s.name = Reader::string(*it, "name");
  if (auto it = root.find("comment"); it != root.end()) {
    if (it->is_string()) {
      s.comment.push_back(it->get<std::string>());
    } else {
      for (std::size_t i = 0; i < Reader::array(*it, "comment").size(); ++i) {
        s.comment.push_back(Reader::string((*it)[i], fmt::format("comment[{}]", i)));
      }
    }
  }

  s.pipeline_volume = Reader::number(r.require(root, "pipeline_volume", ""), "pipeline_volume");
  s.horizon = Reader::number(r.require(root, "horizon", ""), "horizon");

  const json& events = Reader::array(r.require(root, "events", ""), "events");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string path = fmt::format("events[{}]", i);
    Event e;
    e.id = Reader::string(r.require(events[i], "id", path), path + ".id");
    e.time = Reader::number(r.require(events[i], "time", path), path + ".time");
    if (auto it = events[i].find("label"); it != events[i].end()) e.label = Reader::string(*it, path + ".label");
    s.events.push_back(std::move(e));
  }
  if (s.events.size() < 2) throw ScenarioError("events", "at least two events (start and end of horizon) are required");
  const std::size_t intervals = s.events.size() - 1;

  const json& products = Reader::array(r.require(root, "products", ""), "products");
  for (std::size_t i = 0; i < products.size(); ++i) {
    const std::string path = fmt::format("products[{}]", i);
    Product p;
    p.id = Reader::string(r.require(products[i], "id", path), path + ".id");
    p.name = p.id;
    if (auto it = products[i].find("name"); it != products[i].end()) p.name = Reader::string(*it, path + ".name");
    s.products.push_back(std::move(p));
  }

  const json& batch_size = r.require(root, "batch_size", "");
  s.batch_size_max = Reader::number(r.require(batch_size, "max", "batch_size"), "batch_size.max");
  if (auto it = batch_size.find("min"); it != batch_size.end()) s.batch_size_min = Reader::number(*it, "batch_size.min");

  const json& sources = Reader::array(r.require(root, "sources", ""), "sources");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const json& js = sources[i];
    const std::string path = fmt::format("sources[{}]", i);
    SourceTerminal src;
    src.id = Reader::string(r.require(js, "id", path), path + ".id");
    src.tau = Reader::number(r.require(js, "tau", path), path + ".tau");
    src.rate_max = Reader::timeline(r.require(js, "rate_max", path), intervals, path + ".rate_max");
    if (auto it = js.find("rate_min"); it != js.end()) {
      src.rate_min = Reader::timeline(*it, intervals, path + ".rate_min");
    } else {
      src.rate_min = EventTimeline::constant(0.0, intervals);
    }
    src.pump_cost = Reader::product_map(r.require(js, "pump_cost", path), path + ".pump_cost");
    if (auto it = js.find("supply_min"); it != js.end()) src.supply_min = Reader::product_map(*it, path + ".supply_min");
    if (auto it = js.find("supply_max"); it != js.end()) src.supply_max = Reader::product_map(*it, path + ".supply_max");
    s.sources.push_back(std::move(src));
  }

  const double default_delivery_max = s.batch_size_max * static_cast<double>(std::max<std::size_t>(1, s.sources.size()));
  const json& depots = Reader::array(r.require(root, "depots", ""), "depots");
  for (std::size_t i = 0; i < depots.size(); ++i) {
    const json& jd = depots[i];
    const std::string path = fmt::format("depots[{}]", i);
    OutputTerminal d;
    d.id = Reader::string(r.require(jd, "id", path), path + ".id");
    d.sigma = Reader::number(r.require(jd, "sigma", path), path + ".sigma");
    if (auto it = jd.find("demand"); it != jd.end()) {
      d.demand_min = d.demand_max = Reader::product_map(*it, path + ".demand");
    }
    if (auto it = jd.find("demand_min"); it != jd.end()) d.demand_min = Reader::product_map(*it, path + ".demand_min");
    if (auto it = jd.find("demand_max"); it != jd.end()) d.demand_max = Reader::product_map(*it, path + ".demand_max");
    if (auto it = jd.find("backorder_cost"); it != jd.end()) d.backorder_cost = Reader::product_map(*it, path + ".backorder_cost");
    if (auto it = jd.find("delivery_min"); it != jd.end()) {
      d.delivery_min = Reader::timeline(*it, intervals, path + ".delivery_min");
    } else {
      d.delivery_min = EventTimeline::constant(0.0, intervals);
    }
    if (auto it = jd.find("delivery_max"); it != jd.end()) {
      d.delivery_max = Reader::timeline(*it, intervals, path + ".delivery_max");
    } else {
      d.delivery_max = EventTimeline::constant(default_delivery_max, intervals);
    }
    s.depots.push_back(std::move(d));
  }
  std::stable_sort(s.depots.begin(), s.depots.end(),
                   [](const OutputTerminal& a, const OutputTerminal& b) { return a.sigma < b.sigma; });

  const json& old_batches = Reader::array(r.require(root, "old_batches", ""), "old_batches");
  for (std::size_t i = 0; i < old_batches.size(); ++i) {
    const std::string path = fmt::format("old_batches[{}]", i);
    OldBatch b;
    b.id = Reader::string(r.require(old_batches[i], "id", path), path + ".id");
    b.product = Reader::string(r.require(old_batches[i], "product", path), path + ".product");
    b.volume0 = Reader::number(r.require(old_batches[i], "volume", path), path + ".volume");
    s.old_batches.push_back(std::move(b));
  }

  if (auto it = root.find("interface_costs"); it != root.end()) {
    const json& costs = Reader::array(*it, "interface_costs");
    for (std::size_t i = 0; i < costs.size(); ++i) {
      const std::string path = fmt::format("interface_costs[{}]", i);
      auto from = Reader::string(r.require(costs[i], "from", path), path + ".from");
      auto to = Reader::string(r.require(costs[i], "to", path), path + ".to");
      s.interface_cost[{from, to}] = Reader::number(r.require(costs[i], "cost", path), path + ".cost");
    }
  }
  if (auto it = root.find("forbidden_pairs"); it != root.end()) {
    const json& pairs = Reader::array(*it, "forbidden_pairs");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string path = fmt::format("forbidden_pairs[{}]", i);
      if (!pairs[i].is_array() || pairs[i].size() != 2) throw ScenarioError(path, "expected a [predecessor, successor] pair");
      s.forbidden_pairs.emplace_back(Reader::string(pairs[i][0], path + "[0]"), Reader::string(pairs[i][1], path + "[1]"));
    }
  }

  s.run_count = Reader::count(r.require(root, "run_count", ""), "run_count");
  s.new_batch_count = Reader::count(r.require(root, "new_batch_count", ""), "new_batch_count");

  if (auto it = root.find("batch_layout"); it != root.end()) {
    const json& layout = Reader::array(*it, "batch_layout");
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const std::string path = fmt::format("batch_layout[{}]", i);
      auto entry = Reader::string(layout[i], path);
      if (entry == "new") {
        s.layout.push_back({BatchSlot::Kind::New, 0});
      } else {
        auto idx = find_id(s.old_batches, entry);
        if (!idx) throw ScenarioError(path, "'" + entry + "' is neither \"new\" nor an old batch id");
        s.layout.push_back({BatchSlot::Kind::Old, *idx});
      }
    }
  }
  return s;
}

json timeline_json(const EventTimeline& t) {
  const auto& v = t.values();
  if (!v.empty() && std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return v.front();
  return v;
}

}  // namespace

Scenario parse_scenario(std::string_view json_text, const std::string& source_name) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ScenarioError(source_name, std::string("parse error: ") + e.what());
  }
  return from_json(root);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, "cannot open scenario file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path);
}

std::string scenario_to_json(const Scenario& s) {
  json root = json::object();
  if (!s.name.empty()) root["name"] = s.name;
  if (!s.comment.empty()) root["comment"] = s.comment;
  root["pipeline_volume"] = s.pipeline_volume;
  root["horizon"] = s.horizon;
  root["products"] = json::array();
  for (const auto& p : s.products) root["products"].push_back({{"id", p.id}, {"name", p.name}});
  root["sources"] = json::array();
  for (const auto& src : s.sources) {
    json js = {{"id", src.id}, {"tau", src.tau}, {"rate_min", timeline_json(src.rate_min)},
               {"rate_max", timeline_json(src.rate_max)}, {"pump_cost", src.pump_cost}};
    if (!src.supply_min.empty()) js["supply_min"] = src.supply_min;
    if (!src.supply_max.empty()) js["supply_max"] = src.supply_max;
    root["sources"].push_back(std::move(js));
  }
  root["depots"] = json::array();
  for (const auto& d : s.depots) {
    root["depots"].push_back({{"id", d.id},
                              {"sigma", d.sigma},
                              {"demand_min", d.demand_min},
                              {"demand_max", d.demand_max},
                              {"backorder_cost", d.backorder_cost},
                              {"delivery_min", timeline_json(d.delivery_min)},
                              {"delivery_max", timeline_json(d.delivery_max)}});
  }
  root["old_batches"] = json::array();
  for (const auto& b : s.old_batches) {
    root["old_batches"].push_back({{"id", b.id}, {"product", b.product}, {"volume", b.volume0}});
  }
  root["events"] = json::array();
  for (const auto& e : s.events) {
    json je = {{"id", e.id}, {"time", e.time}};
    if (!e.label.empty()) je["label"] = e.label;
    root["events"].push_back(std::move(je));
  }
  root["interface_costs"] = json::array();
  for (const auto& [pair, cost] : s.interface_cost) {
    root["interface_costs"].push_back({{"from", pair.first}, {"to", pair.second}, {"cost", cost}});
  }
  root["forbidden_pairs"] = json::array();
  for (const auto& [a, b] : s.forbidden_pairs) root["forbidden_pairs"].push_back({a, b});
  root["batch_size"] = {{"min", s.batch_size_min}, {"max", s.batch_size_max}};
  root["run_count"] = s.run_count;
  root["new_batch_count"] = s.new_batch_count;
  if (!s.layout.empty()) {
    json layout = json::array();
    for (const auto& slot : s.layout) {
      layout.push_back(slot.kind == BatchSlot::Kind::New ? std::string("new") : s.old_batches.at(slot.old_index).id);
    }
    root["batch_layout"] = std::move(layout);
  }
  return root.dump(2);
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError(path, "cannot write scenario file");
  out << scenario_to_json(s) << '\n';
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> validate(const Scenario& s) {
  std::vector<Violation> out;
  auto fail = [&](std::string field, std::string message) {
    out.push_back({std::move(field), std::move(message)});
  };
  const double eps = volume_epsilon(s);

  if (!(s.pipeline_volume > 0)) fail("pipeline_volume", "must be positive");
  if (!(s.horizon > 0)) fail("horizon", "must be positive");

  std::set<std::string> product_ids;
  for (std::size_t i = 0; i < s.products.size(); ++i) {
    if (s.products[i].id.empty()) fail(fmt::format("products[{}].id", i), "must not be empty");
    if (!product_ids.insert(s.products[i].id).second) {
      fail(fmt::format("products[{}].id", i), "duplicate product id '" + s.products[i].id + "'");
    }
  }
  if (s.products.empty()) fail("products", "at least one product is required");
  auto check_products = [&](const std::map<std::string, double>& m, const std::string& path, bool nonneg) {
    for (const auto& [p, v] : m) {
      if (!product_ids.count(p)) fail(path + "." + p, "unknown product");
      if (nonneg && v < 0) fail(path + "." + p, "must be non-negative");
    }
  };

  // Events.
  if (s.events.size() < 2) {
    fail("events", "at least two events are required");
  } else {
    if (std::abs(s.events.front().time) > 1e-9) fail("events[0].time", "first event must occur at time 0");
    if (std::abs(s.events.back().time - s.horizon) > 1e-9) {
      fail(fmt::format("events[{}].time", s.events.size() - 1), "last event must occur at the horizon");
    }
    for (std::size_t e = 1; e < s.events.size(); ++e) {
      if (!(s.events[e].time > s.events[e - 1].time)) {
        fail(fmt::format("events[{}].time", e), fmt::format("events must be strictly increasing in time ({} after {})",
                                                            s.events[e].time, s.events[e - 1].time));
      }
    }
  }
  const std::size_t intervals = s.interval_count();
  auto check_timeline_pair = [&](const EventTimeline& lo, const EventTimeline& hi, const std::string& path,
                                 const char* lo_name, const char* hi_name) {
    if (lo.size() != intervals) fail(path + "." + lo_name, fmt::format("expected {} interval values", intervals));
    if (hi.size() != intervals) fail(path + "." + hi_name, fmt::format("expected {} interval values", intervals));
    for (std::size_t e = 0; e < std::min(lo.size(), hi.size()); ++e) {
      if (lo.values()[e] < 0 || lo.values()[e] > hi.values()[e]) {
        fail(fmt::format("{}.{}[{}]", path, lo_name, e), fmt::format("need 0 <= {} <= {}", lo_name, hi_name));
      }
    }
  };

  // Sources.
  std::set<std::string> source_ids;
  if (s.sources.empty()) fail("sources", "at least one source is required");
  for (std::size_t i = 0; i < s.sources.size(); ++i) {
    const auto& src = s.sources[i];
    const std::string path = fmt::format("sources[{}]", i);
    if (!source_ids.insert(src.id).second) fail(path + ".id", "duplicate source id '" + src.id + "'");
    if (src.tau < 0 || src.tau >= s.pipeline_volume) fail(path + ".tau", "must satisfy 0 <= tau < pipeline_volume");
    check_timeline_pair(src.rate_min, src.rate_max, path, "rate_min", "rate_max");
    check_products(src.pump_cost, path + ".pump_cost", true);
    check_products(src.supply_min, path + ".supply_min", true);
    check_products(src.supply_max, path + ".supply_max", true);
    for (const auto& [p, lo] : src.supply_min) {
      auto it = src.supply_max.find(p);
      if (it != src.supply_max.end() && lo > it->second) fail(path + ".supply_min." + p, "exceeds supply_max");
    }
  }

  // Depots.
  std::set<std::string> depot_ids;
  if (s.depots.empty()) fail("depots", "at least one depot is required");
  for (std::size_t j = 0; j < s.depots.size(); ++j) {
    const auto& d = s.depots[j];
    const std::string path = fmt::format("depots[{}]", j);
    if (!depot_ids.insert(d.id).second) fail(path + ".id", "duplicate depot id '" + d.id + "'");
    if (d.sigma <= 0 || d.sigma > s.pipeline_volume) fail(path + ".sigma", "must satisfy 0 < sigma <= pipeline_volume");
    if (j > 0 && d.sigma < s.depots[j - 1].sigma) fail(path + ".sigma", "depots must be sorted by ascending sigma");
    check_products(d.demand_min, path + ".demand_min", true);
    check_products(d.demand_max, path + ".demand_max", true);
    check_products(d.backorder_cost, path + ".backorder_cost", true);
    for (const auto& [p, lo] : d.demand_min) {
      if (lo > s.demand_max(p, j) + eps) fail(path + ".demand_min." + p, "exceeds demand_max");
    }
    check_timeline_pair(d.delivery_min, d.delivery_max, path, "delivery_min", "delivery_max");
  }

  // Old batches.
  std::set<std::string> batch_ids;
  double total = 0.0;
  for (std::size_t i = 0; i < s.old_batches.size(); ++i) {
    const auto& b = s.old_batches[i];
    const std::string path = fmt::format("old_batches[{}]", i);
    if (!batch_ids.insert(b.id).second) fail(path + ".id", "duplicate batch id '" + b.id + "'");
    if (!product_ids.count(b.product)) fail(path + ".product", "unknown product '" + b.product + "'");
    if (!(b.volume0 > 0)) fail(path + ".volume", "must be positive");
    total += b.volume0;
  }
  if (std::abs(total - s.pipeline_volume) > eps) {
    fail("old_batches", fmt::format("pipeline not full at t=0: old batch volumes sum to {} but pipeline_volume is {}",
                                    total, s.pipeline_volume));
  }

  for (const auto& [pair, cost] : s.interface_cost) {
    const std::string path = "interface_costs." + pair.first + "->" + pair.second;
    if (!product_ids.count(pair.first) || !product_ids.count(pair.second)) fail(path, "unknown product");
    if (cost < 0) fail(path, "must be non-negative");
  }
  for (std::size_t i = 0; i < s.forbidden_pairs.size(); ++i) {
    const auto& [a, b] = s.forbidden_pairs[i];
    const std::string path = fmt::format("forbidden_pairs[{}]", i);
    if (!product_ids.count(a) || !product_ids.count(b)) fail(path, "unknown product");
    if (a == b) fail(path, "a forbidden sequence needs two distinct products");
  }

  if (s.batch_size_min < 0) fail("batch_size.min", "must be non-negative");
  if (!(s.batch_size_max > 0)) fail("batch_size.max", "must be positive");
  if (s.batch_size_min > s.batch_size_max) fail("batch_size.min", "exceeds batch_size.max");
  if (s.run_count < 1) fail("run_count", "must be at least 1");

  if (!s.layout.empty()) {
    std::size_t new_slots = 0;
    std::size_t next_old = 0;
    bool ordered = true;
    for (const auto& slot : s.layout) {
      if (slot.kind == BatchSlot::Kind::New) {
        ++new_slots;
      } else {
        if (slot.old_index != next_old) ordered = false;
        ++next_old;
      }
    }
    if (!ordered || next_old != s.old_batches.size()) {
      fail("batch_layout", "must list every old batch exactly once, in old_batches order");
    }
    if (new_slots != s.new_batch_count) {
      fail("batch_layout", fmt::format("has {} new slots but new_batch_count is {}", new_slots, s.new_batch_count));
    }
  }
  return out;
}

}  // namespace pipesched
