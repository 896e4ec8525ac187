#include "pipesched/replanner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "json.hpp"
#include "pipesched/extract.hpp"

namespace pipesched {

namespace {

constexpr double kTimeEps = 1e-9;

std::size_t event_at_or_before(const Scenario& s, double t) {
  std::size_t idx = 0;
  for (std::size_t e = 0; e < s.events.size(); ++e) {
    if (s.events[e].time <= t + kTimeEps) idx = e;
  }
  return idx;
}

std::vector<EventTimeline*> timelines(Scenario& s) {
  std::vector<EventTimeline*> out;
  for (auto& src : s.sources) {
    out.push_back(&src.rate_min);
    out.push_back(&src.rate_max);
  }
  for (auto& d : s.depots) {
    out.push_back(&d.delivery_min);
    out.push_back(&d.delivery_max);
  }
  return out;
}

EventTimeline* parameter(Scenario& s, const Override& o) {
  if (auto i = s.source_index(o.terminal)) {
    auto& src = s.sources[*i];
    if (o.parameter == "rate_min") return &src.rate_min;
    if (o.parameter == "rate_max") return &src.rate_max;
    throw ScenarioError("overrides." + o.terminal, "sources accept rate_min or rate_max, not " + o.parameter);
  }
  if (auto j = s.depot_index(o.terminal)) {
    auto& d = s.depots[*j];
    if (o.parameter == "delivery_min") return &d.delivery_min;
    if (o.parameter == "delivery_max") return &d.delivery_max;
    throw ScenarioError("overrides." + o.terminal, "depots accept delivery_min or delivery_max, not " + o.parameter);
  }
  throw ScenarioError("overrides." + o.terminal, "unknown terminal");
}

std::map<int, std::string> slot_products(const Schedule& sch, const Scenario& s) {
  std::map<int, std::string> out;
  const auto slots = s.slots();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].kind == BatchSlot::Kind::Old) out[static_cast<int>(i) + 1] = s.old_batches[slots[i].old_index].product;
  }
  for (const auto& t : sch.trajectories) {
    if (!t.product.empty()) out.emplace(t.batch, t.product);
  }
  for (const auto& r : sch.runs) {
    for (const auto& inj : r.injections) out.emplace(inj.batch, inj.product);
  }
  return out;
}

std::vector<double> initial_sizes(const Scenario& s) {
  const auto slots = s.slots();
  std::vector<double> w(slots.size() + 1, 0.0);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].kind == BatchSlot::Kind::Old) w[i + 1] = s.old_batches[slots[i].old_index].volume0;
  }
  return w;
}

void apply_run(std::vector<double>& w, const PumpingRun& r) {
  for (const auto& inj : r.injections) w.at(static_cast<std::size_t>(inj.batch)) += inj.volume;
  for (const auto& d : r.deliveries) w.at(static_cast<std::size_t>(d.batch)) -= d.volume;
}

PumpingRun truncate(const PumpingRun& r, double t) {
  PumpingRun out = r;
  const double f = r.end > r.start ? (t - r.start) / (r.end - r.start) : 1.0;
  for (auto& inj : out.injections) {
    inj.volume *= f;
    inj.duration *= f;
  }
  for (auto& d : out.deliveries) d.volume *= f;
  out.end = t;
  out.interrupted = true;
  return out;
}

// Splits the run in progress at t into its executed part and the remainder.
void split_at(Schedule& sch, double t) {
  std::vector<PumpingRun> out;
  for (const auto& r : sch.runs) {
    if (r.start < t - kTimeEps && r.end > t + kTimeEps) {
      PumpingRun head = truncate(r, t);
      PumpingRun tail = r;
      const double f = (r.end - t) / (r.end - r.start);
      for (std::size_t n = 0; n < tail.injections.size(); ++n) {
        tail.injections[n].volume = r.injections[n].volume - head.injections[n].volume;
        tail.injections[n].duration = std::max(0.0, r.injections[n].duration - head.injections[n].duration);
      }
      for (std::size_t n = 0; n < tail.deliveries.size(); ++n) tail.deliveries[n].volume = r.deliveries[n].volume * f;
      tail.start = t;
      tail.resumes = true;
      out.push_back(std::move(head));
      out.push_back(std::move(tail));
    } else {
      out.push_back(r);
    }
  }
  sch.runs = std::move(out);
}

int interval_of(const Scenario& s, double start, double end) {
  const double tol = 1e-6;
  for (std::size_t e = 1; e < s.events.size(); ++e) {
    if (start >= s.events[e - 1].time - tol && end <= s.events[e].time + tol) return static_cast<int>(e);
  }
  return 0;
}

// True when run r cannot execute under the parameters of interval e.
bool conflicts(const PumpingRun& r, const Scenario& s, std::size_t e, double vtol) {
  std::map<std::string, std::pair<double, double>> per_source;
  for (const auto& inj : r.injections) {
    auto& acc = per_source[inj.source];
    acc.first += inj.volume;
    acc.second = std::max(acc.second, inj.duration);
  }
  for (const auto& [id, acc] : per_source) {
    const auto& src = s.sources[*s.source_index(id)];
    if (acc.first > param_at(src.rate_max, e) * acc.second + vtol) return true;
    if (acc.first < param_at(src.rate_min, e) * acc.second - vtol) return true;
  }
  std::map<std::pair<int, std::string>, double> per_delivery;
  for (const auto& d : r.deliveries) per_delivery[{d.batch, d.depot}] += d.volume;
  for (const auto& [key, vol] : per_delivery) {
    const auto& depot = s.depots[*s.depot_index(key.second)];
    if (vol > param_at(depot.delivery_max, e) + vtol || vol < param_at(depot.delivery_min, e) - vtol) return true;
  }
  return false;
}

void renumber(Schedule& sch) {
  for (std::size_t n = 0; n < sch.runs.size(); ++n) sch.runs[n].index = static_cast<int>(n) + 1;
}

}  // namespace

std::vector<Realization> parse_realizations(const std::string& json_text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("realizations", e.what());
  }
  if (root.is_object() && root.contains("realizations")) root = root["realizations"];
  if (!root.is_array()) throw ScenarioError("realizations", "expected an array of realizations");
  std::vector<Realization> out;
  try {
    for (std::size_t n = 0; n < root.size(); ++n) {
      const auto& item = root[n];
      Realization r;
      r.id = item.value("id", fmt::format("r{}", n + 1));
      r.time = item.at("time").get<double>();
      for (const auto& o : item.at("overrides")) {
        r.overrides.push_back(
            {o.at("terminal").get<std::string>(), o.at("parameter").get<std::string>(), o.at("value").get<double>()});
      }
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError("realizations", e.what());
  }
  return out;
}

std::vector<Realization> load_realizations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_realizations(buf.str());
}

Scenario apply_realizations(const Scenario& base, const std::vector<Realization>& realizations) {
  Scenario s = base;
  auto ordered = realizations;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Realization& a, const Realization& b) { return a.time < b.time; });
  for (const auto& r : ordered) {
    if (!(r.time > 0) || !(r.time < s.horizon)) {
      throw ScenarioError("realizations." + r.id, fmt::format("time {} outside (0, {})", r.time, s.horizon));
    }
    const std::size_t before = event_at_or_before(s, r.time);
    std::size_t first_interval = before + 1;
    if (std::abs(s.events[before].time - r.time) > kTimeEps) {
      // Interval `before + 1` is cut in two at r.time.
      s.events.insert(s.events.begin() + static_cast<std::ptrdiff_t>(before) + 1, Event{r.id, r.time, "realization"});
      for (auto* tl : timelines(s)) {
        auto& v = tl->values();
        v.insert(v.begin() + static_cast<std::ptrdiff_t>(before), v[before]);
      }
      first_interval = before + 2;
    }
    for (const auto& o : r.overrides) {
      auto& v = parameter(s, o)->values();
      for (std::size_t e = first_interval; e <= v.size(); ++e) v[e - 1] = o.value;
    }
  }
  return s;
}

PlanResult plan(const Scenario& s, const PlanOptions& opt) {
  auto violations = validate(s);
  if (!violations.empty()) throw ScenarioError(violations.front().field, violations.front().message);
  PlanResult res;
  const auto m = build_model(s, opt.build);
  res.stats = model_stats(m);
  const auto sol = solve(m, opt.solver);
  res.status = sol.status;
  res.gap = sol.gap;
  res.seconds = sol.solve_seconds;
  if (!sol.has_values()) {
    res.message = fmt::format("solver finished with status {} and no usable point", status_name(sol.status));
    return res;
  }
  res.objective = evaluate_cost(m, sol.values);
  try {
    res.schedule = extract_schedule(sol, m, s);
  } catch (const ExtractionError& e) {
    res.message = e.what();
    return res;
  }
  res.extracted = true;
  res.report = simulate(res.schedule, s, opt.verify);
  if (!res.report.passed) res.message = "extracted schedule failed verification";
  return res;
}

PlanResult plan_event_aware(const Scenario& s, const PlanOptions& opt) { return plan(s, opt); }

void rebuild_schedule(Schedule& sch, const Scenario& s) {
  const auto products = slot_products(sch, s);
  const auto slots = s.slots();
  std::vector<double> w = initial_sizes(s);
  auto uppers = [&] {
    std::vector<double> f(w.size() + 1, 0.0);
    for (std::size_t i = w.size() - 1; i >= 1; --i) f[i] = f[i + 1] + w[i];
    return f;
  };
  std::map<int, BatchTrajectory> traj;
  for (const auto& [batch, product] : products) {
    BatchTrajectory t;
    t.batch = batch;
    t.product = product;
    t.old = slots[static_cast<std::size_t>(batch - 1)].kind == BatchSlot::Kind::Old;
    traj[batch] = std::move(t);
  }
  auto snapshot = [&] {
    const auto f = uppers();
    for (auto& [batch, t] : traj) {
      t.upper.push_back(f[static_cast<std::size_t>(batch)]);
      t.size.push_back(w[static_cast<std::size_t>(batch)]);
    }
  };
  snapshot();
  for (auto& r : sch.runs) {
    apply_run(w, r);
    snapshot();
    if (int e = interval_of(s, r.start, r.end)) r.interval = e;
  }
  sch.trajectories.clear();
  for (auto& [batch, t] : traj) sch.trajectories.push_back(std::move(t));
  assign_batch_ids(sch, s);

  sch.backorders.clear();
  const double tol = 1e-6 * s.pipeline_volume;
  for (std::size_t j = 0; j < s.depots.size(); ++j) {
    for (const auto& p : s.products) {
      const double short_by = s.demand_min(p.id, j) - delivered(sch, p.id, s.depots[j].id);
      if (short_by > tol) sch.backorders.push_back({p.id, s.depots[j].id, short_by});
    }
  }
  sch.cost = cost_breakdown(sch, s);
}

Residual freeze_prefix(const Schedule& sch, const Scenario& s, double t) {
  if (t < 0 || t > s.horizon) throw std::out_of_range(fmt::format("freeze time {} outside [0, {}]", t, s.horizon));
  Residual res;
  res.time = t;
  std::size_t completed = 0;
  for (const auto& r : sch.runs) {
    if (r.end <= t + kTimeEps) {
      res.prefix.runs.push_back(r);
      ++completed;
    } else if (r.start < t - kTimeEps) {
      res.prefix.runs.push_back(truncate(r, t));
    }
  }
  std::set<int> touched;
  for (const auto& r : res.prefix.runs) {
    for (const auto& inj : r.injections) touched.insert(inj.batch);
  }
  for (const auto& tr : sch.trajectories) {
    if (tr.old || touched.count(tr.batch)) res.prefix.trajectories.push_back(tr);
  }
  rebuild_schedule(res.prefix, s);

  std::vector<double> w = initial_sizes(s);
  std::vector<bool> injected(w.size(), false);
  for (const auto& r : res.prefix.runs) {
    apply_run(w, r);
    for (const auto& inj : r.injections) {
      if (inj.volume > 0) injected[static_cast<std::size_t>(inj.batch)] = true;
    }
  }
  const auto products = slot_products(res.prefix, s);
  const auto slots = s.slots();
  const double tol = 1e-6 * s.pipeline_volume;

  Scenario& out = res.scenario;
  out = s;
  out.old_batches.clear();
  out.layout.clear();
  std::size_t new_slots = 0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    const auto& slot = slots[i - 1];
    const bool old = slot.kind == BatchSlot::Kind::Old;
    if (w[i] > tol) {
      const std::string id = old ? s.old_batches[slot.old_index].id : res.prefix.batch_id(static_cast<int>(i));
      out.layout.push_back({BatchSlot::Kind::Old, out.old_batches.size()});
      out.old_batches.push_back({id, products.at(static_cast<int>(i)), w[i]});
    } else if (!old && !injected[i]) {
      out.layout.push_back({BatchSlot::Kind::New, 0});
      ++new_slots;
    } else {
      continue;
    }
    res.slot_map.push_back(static_cast<int>(i));
  }
  // Absorb replay round-off so the residual line is exactly full.
  if (!out.old_batches.empty()) {
    double total = 0.0;
    for (const auto& b : out.old_batches) total += b.volume0;
    out.old_batches.back().volume0 += s.pipeline_volume - total;
  }
  out.new_batch_count = new_slots;
  std::vector<BatchSlot> plain;
  for (std::size_t i = 0; i < out.old_batches.size(); ++i) plain.push_back({BatchSlot::Kind::Old, i});
  for (std::size_t i = 0; i < new_slots; ++i) plain.push_back({BatchSlot::Kind::New, 0});
  if (s.layout.empty() && out.layout == plain) out.layout.clear();

  // Time origin moves to t.
  const std::size_t first = event_at_or_before(s, t);
  out.events.clear();
  out.events.push_back({s.events[first].id, 0.0, s.events[first].label});
  for (std::size_t e = first + 1; e < s.events.size(); ++e) {
    out.events.push_back({s.events[e].id, s.events[e].time - t, s.events[e].label});
  }
  out.horizon = s.horizon - t;
  auto sliced = [&](EventTimeline& tl) {
    auto& v = tl.values();
    v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(first));
  };
  for (auto* tl : timelines(out)) sliced(*tl);

  for (std::size_t j = 0; j < out.depots.size(); ++j) {
    auto& d = out.depots[j];
    for (auto* m : {&d.demand_min, &d.demand_max}) {
      for (auto& [p, v] : *m) v = std::max(0.0, v - delivered(res.prefix, p, d.id));
    }
  }
  for (auto& src : out.sources) {
    std::map<std::string, double> pumped;
    for (const auto& r : res.prefix.runs) {
      for (const auto& inj : r.injections) {
        if (inj.source == src.id) pumped[inj.product] += inj.volume;
      }
    }
    for (auto* m : {&src.supply_min, &src.supply_max}) {
      for (auto& [p, v] : *m) v = std::max(0.0, v - pumped[p]);
    }
  }
  out.run_count = std::max<std::size_t>(1, s.run_count > completed ? s.run_count - completed : 1);
  return res;
}

const char* baseline_mode_name(BaselineMode m) { return m == BaselineMode::Resume ? "resume" : "resolve"; }

BaselineMode parse_baseline_mode(const std::string& name) {
  if (name == "resume") return BaselineMode::Resume;
  if (name == "resolve") return BaselineMode::Resolve;
  throw std::invalid_argument("baseline mode must be 'resume' or 'resolve', got '" + name + "'");
}

BaselineResult plan_reactive_baseline(const Scenario& base, const std::vector<Realization>& realizations,
                                      BaselineMode mode, const PlanOptions& opt, const PlanResult* nominal) {
  BaselineResult out;
  out.mode = mode;
  out.nominal = nominal ? *nominal : plan(base, opt);
  const Scenario realized = apply_realizations(base, realizations);
  if (!out.nominal.has_schedule()) {
    out.log.push_back("event-blind plan unavailable: " + out.nominal.message);
    return out;
  }
  auto ordered = realizations;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Realization& a, const Realization& b) { return a.time < b.time; });

  Schedule sch = out.nominal.schedule;
  const double vtol = opt.verify.volume_tolerance * base.pipeline_volume;
  out.completed = true;
  for (std::size_t n = 0; n < ordered.size(); ++n) {
    const double t = ordered[n].time;
    const double t_next = n + 1 < ordered.size() ? ordered[n + 1].time : realized.horizon;
    const std::size_t e = event_at_or_before(realized, t) + 1;

    if (mode == BaselineMode::Resume) {
      split_at(sch, t);
      bool blocked = false;
      for (const auto& r : sch.runs) {
        if (r.start >= t - 1e-6 && r.start < t_next - 1e-6 && conflicts(r, realized, e, vtol)) blocked = true;
      }
      if (!blocked) {
        out.log.push_back(fmt::format("{} at {}: remaining plan unaffected", ordered[n].id, format_hours(t)));
        continue;
      }
      if (n + 1 == ordered.size()) {
        out.log.push_back(fmt::format("{} at {}: remaining plan cannot run and no later change is known",
                                      ordered[n].id, format_hours(t)));
        out.completed = false;
        break;
      }
      const double shift = t_next - t;
      for (auto& r : sch.runs) {
        if (r.start >= t - 1e-6) {
          r.start += shift;
          r.end += shift;
        }
      }
      out.log.push_back(fmt::format("{} at {}: line halted, remainder resumes at {} (+{} h)", ordered[n].id,
                                    format_hours(t), format_hours(t_next), format_hours(shift)));
    } else {
      std::vector<Realization> known(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(n) + 1);
      const Scenario now = apply_realizations(base, known);
      Residual res = freeze_prefix(sch, now, t);
      const bool shutdown = std::all_of(now.sources.begin(), now.sources.end(),
                                        [&](const SourceTerminal& src) { return param_at(src.rate_max, e) <= 0; });
      if (shutdown && n + 1 < ordered.size()) {
        sch = res.prefix;
        out.log.push_back(fmt::format("{} at {}: no source can pump, line idle until {}", ordered[n].id,
                                      format_hours(t), format_hours(t_next)));
        continue;
      }
      PlanResult tail = plan(res.scenario, opt);
      if (!tail.has_schedule()) {
        out.log.push_back(fmt::format("{} at {}: re-solve failed ({})", ordered[n].id, format_hours(t), tail.message));
        out.completed = false;
        sch = res.prefix;
        break;
      }
      Schedule merged = res.prefix;
      for (auto r : tail.schedule.runs) {
        r.start += t;
        r.end += t;
        for (auto& inj : r.injections) inj.batch = res.slot_map.at(static_cast<std::size_t>(inj.batch - 1));
        for (auto& d : r.deliveries) d.batch = res.slot_map.at(static_cast<std::size_t>(d.batch - 1));
        merged.runs.push_back(std::move(r));
      }
      for (const auto& tr : tail.schedule.trajectories) {
        if (tr.product.empty()) continue;
        BatchTrajectory mapped;
        mapped.batch = res.slot_map.at(static_cast<std::size_t>(tr.batch - 1));
        mapped.product = tr.product;
        merged.trajectories.push_back(std::move(mapped));
      }
      sch = std::move(merged);
      rebuild_schedule(sch, realized);
      out.log.push_back(fmt::format("{} at {}: prefix frozen, re-solved ({}, objective {:.4f})", ordered[n].id,
                                    format_hours(t), status_name(tail.status), tail.objective));
    }
  }
  renumber(sch);
  rebuild_schedule(sch, realized);
  if (!sch.runs.empty() && makespan(sch) > realized.horizon + 1e-6) {
    out.log.push_back(fmt::format("executed plan ends at {}, past the horizon {}", format_hours(makespan(sch)),
                                  format_hours(realized.horizon)));
  }
  out.schedule = std::move(sch);
  out.report = simulate(out.schedule, realized, opt.verify);
  return out;
}

ComparisonReport compare(const Schedule& aware, const Schedule& baseline, const Scenario& s) {
  ComparisonReport c;
  c.aware_makespan = aware.runs.empty() ? 0.0 : makespan(aware);
  c.baseline_makespan = baseline.runs.empty() ? 0.0 : makespan(baseline);
  c.delta = c.baseline_makespan - c.aware_makespan;
  c.delta_over_baseline = c.baseline_makespan > 0 ? c.delta / c.baseline_makespan : 0.0;
  c.delta_over_aware = c.aware_makespan > 0 ? c.delta / c.aware_makespan : 0.0;
  c.aware_cost = cost_breakdown(aware, s);
  c.baseline_cost = cost_breakdown(baseline, s);
  c.cost_delta = c.baseline_cost.total - c.aware_cost.total;
  c.aware_runs = aware.runs.size();
  c.baseline_runs = baseline.runs.size();
  c.aware_verified = simulate(aware, s).passed;
  c.baseline_verified = simulate(baseline, s).passed;
  return c;
}

ComparisonReport compare(const PlanResult& aware, const BaselineResult& baseline, const Scenario& realized) {
  ComparisonReport c = compare(aware.schedule, baseline.schedule, realized);
  c.mode = baseline.mode;
  if (!aware.has_schedule()) c.notes.push_back("event-aware plan unavailable: " + aware.message);
  if (!baseline.completed) {
    c.baseline_verified = false;
    c.notes.push_back("reactive baseline did not complete; figures cover the executed prefix only");
  }
  c.notes.insert(c.notes.end(), baseline.log.begin(), baseline.log.end());
  return c;
}

std::string ComparisonReport::to_text() const {
  auto mark = [](bool ok) { return ok ? "verified" : "NOT verified"; };
  const std::string label = fmt::format("reactive ({})", baseline_mode_name(mode));
  std::ostringstream os;
  os << fmt::format("{:<22} {:>10} {:>12} {:>6}  {}\n", "regime", "makespan h", "cost", "runs", "verdict");
  os << fmt::format("{:<22} {:>10} {:>12.2f} {:>6}  {}\n", "event-aware", format_hours(aware_makespan), aware_cost.total,
                    aware_runs, mark(aware_verified));
  os << fmt::format("{:<22} {:>10} {:>12.2f} {:>6}  {}\n", label, format_hours(baseline_makespan),
                    baseline_cost.total, baseline_runs, mark(baseline_verified));
  os << fmt::format("makespan delta          {} h\n", format_hours(delta));
  os << fmt::format("delta / reactive        {:.2f}%\n", 100.0 * delta_over_baseline);
  os << fmt::format("delta / event-aware     {:.2f}%  (the convention behind the published \"16%\")\n",
                    100.0 * delta_over_aware);
  os << fmt::format("cost delta              {:.2f}\n", cost_delta);
  for (const auto& n : notes) os << "note: " << n << "\n";
  return os.str();
}

std::string ComparisonReport::to_json() const {
  auto cost = [](const CostBreakdown& c) {
    return nlohmann::json{
        {"interface", c.interface}, {"pumping", c.pumping}, {"backorder", c.backorder}, {"total", c.total}};
  };
  nlohmann::json j{{"baseline_mode", baseline_mode_name(mode)},
                   {"aware_makespan", aware_makespan},
                   {"baseline_makespan", baseline_makespan},
                   {"delta", delta},
                   {"delta_over_baseline", delta_over_baseline},
                   {"delta_over_aware", delta_over_aware},
                   {"aware_verified", aware_verified},
                   {"baseline_verified", baseline_verified},
                   {"aware_cost", cost(aware_cost)},
                   {"baseline_cost", cost(baseline_cost)},
                   {"cost_delta", cost_delta},
                   {"aware_runs", aware_runs},
                   {"baseline_runs", baseline_runs},
                   {"notes", notes}};
  return j.dump(2);
}

}  // namespace pipesched
