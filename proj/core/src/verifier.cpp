#include "pipesched/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "json.hpp"

namespace pipesched {

namespace {

const std::vector<std::string> kFamilies = {
    "schema", "eq1",  "eq2",  "eq3",  "eq6",  "eq8",  "eq9",  "eq11", "eq12", "eq13", "eq14", "eq15",
    "eq16",   "eq17", "eq18", "eq19", "eq20", "eq21", "eq22", "eq23", "eq24", "eq26", "eq27", "eq28",
    "eq29",   "eq30", "eq32", "eq34", "eq35", "eq36", "eqSU", "cost"};

class Recorder {
 public:
  void fail(const std::string& tag, std::string location, std::string detail) {
    failures_.push_back({tag, false, std::move(location), std::move(detail)});
  }
  std::vector<Check> finish() const {
    std::set<std::string> bad;
    for (const auto& c : failures_) bad.insert(c.tag);
    std::vector<Check> out;
    for (const auto& tag : kFamilies) {
      if (!bad.count(tag)) out.push_back({tag, true, "", ""});
    }
    out.insert(out.end(), failures_.begin(), failures_.end());
    return out;
  }
  bool ok() const { return failures_.empty(); }

 private:
  std::vector<Check> failures_;
};

std::string run_at(const PumpingRun& r, std::size_t pos) { return fmt::format("run {} (#{})", r.index, pos + 1); }

// Plug-flow line: W[i] is the size of slot i (1-based, slot 1 at the far end).
// The upper coordinate of slot i, measured from the origin, is the volume at or behind it.
struct Line {
  std::vector<double> w;

  double upper(int i) const {
    double f = 0.0;
    for (std::size_t i2 = static_cast<std::size_t>(i); i2 < w.size(); ++i2) f += w[i2];
    return f;
  }
  double lower(int i) const { return upper(i) - w[static_cast<std::size_t>(i)]; }
  double total() const { return upper(1); }
};

Line initial_line(const Scenario& s) {
  const auto slots = s.slots();
  Line line;
  line.w.assign(slots.size() + 1, 0.0);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].kind == BatchSlot::Kind::Old) line.w[i + 1] = s.old_batches[slots[i].old_index].volume0;
  }
  return line;
}

// Interval whose closed window contains [start, end]; the declared one wins ties.
int locate_interval(const Scenario& s, const PumpingRun& r, double tol) {
  const int E = static_cast<int>(s.interval_count());
  auto fits = [&](int e) {
    return r.start >= s.events[e - 1].time - tol && r.end <= s.events[e].time + tol;
  };
  if (r.interval >= 1 && r.interval <= E && fits(r.interval)) return r.interval;
  for (int e = 1; e <= E; ++e) {
    if (fits(e)) return e;
  }
  return 0;
}

std::map<int, std::string> batch_products(const Schedule& sch, const Scenario& s) {
  std::map<int, std::string> out;
  const auto slots = s.slots();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].kind == BatchSlot::Kind::Old) out[static_cast<int>(i) + 1] = s.old_batches[slots[i].old_index].product;
  }
  for (const auto& t : sch.trajectories) {
    if (!t.product.empty() && t.batch >= 1 && t.batch <= static_cast<int>(slots.size())) out.emplace(t.batch, t.product);
  }
  for (const auto& r : sch.runs) {
    for (const auto& inj : r.injections) out.emplace(inj.batch, inj.product);
  }
  return out;
}

}  // namespace

double PipelineState::total() const {
  double v = 0.0;
  for (const auto& seg : segments) v += seg.volume;
  return v;
}

std::vector<Check> VerificationReport::failures() const {
  std::vector<Check> out;
  for (const auto& c : checks) {
    if (!c.passed) out.push_back(c);
  }
  return out;
}

bool VerificationReport::failed(const std::string& tag) const {
  return std::any_of(checks.begin(), checks.end(), [&](const Check& c) { return !c.passed && c.tag == tag; });
}

std::string VerificationReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"tag", c.tag}, {"passed", c.passed}, {"location", c.location}, {"detail", c.detail}});
  }
  j["cost"] = {{"interface", recomputed_cost.interface},
               {"pumping", recomputed_cost.pumping},
               {"backorder", recomputed_cost.backorder},
               {"total", recomputed_cost.total}};
  j["demand_ledger"] = nlohmann::json::array();
  for (const auto& d : demand_ledger) {
    j["demand_ledger"].push_back({{"product", d.product},
                                  {"depot", d.depot},
                                  {"delivered", d.delivered},
                                  {"demand_min", d.demand_min},
                                  {"demand_max", d.demand_max},
                                  {"backorder", d.backorder}});
  }
  return j.dump(2);
}

std::string VerificationReport::to_text() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << "\n";
  for (const auto& c : checks) {
    if (c.passed) continue;
    os << fmt::format("  {:<6} {:<16} {}\n", c.tag, c.location, c.detail);
  }
  os << fmt::format("cost: interface {:.2f} pumping {:.2f} backorder {:.2f} total {:.2f}\n", recomputed_cost.interface,
                    recomputed_cost.pumping, recomputed_cost.backorder, recomputed_cost.total);
  os << "demand:\n";
  for (const auto& d : demand_ledger) {
    os << fmt::format("  {:<4} {:<4} delivered {:8.2f}  min {:8.2f}  max {:8.2f}  backorder {:8.2f}\n", d.product,
                      d.depot, d.delivered, d.demand_min, d.demand_max, d.backorder);
  }
  return os.str();
}

VerificationReport simulate(const Schedule& sch, const Scenario& s, const VerifyOptions& opt) {
  Recorder rec;
  const double vtol = opt.volume_tolerance * s.pipeline_volume;
  const double ttol = opt.time_tolerance;
  const auto slots = s.slots();
  const int I = static_cast<int>(slots.size());
  auto is_old = [&](int i) { return slots[static_cast<std::size_t>(i - 1)].kind == BatchSlot::Kind::Old; };

  // Structural sanity: every reference resolves.
  bool structural = true;
  auto need = [&](bool cond, const std::string& where, const std::string& what) {
    if (!cond) {
      rec.fail("schema", where, what);
      structural = false;
    }
  };
  for (std::size_t n = 0; n < sch.runs.size(); ++n) {
    const auto& r = sch.runs[n];
    const auto where = run_at(r, n);
    for (const auto& inj : r.injections) {
      need(s.source_index(inj.source).has_value(), where, "unknown source " + inj.source);
      need(s.product_index(inj.product).has_value(), where, "unknown product " + inj.product);
      need(inj.batch >= 1 && inj.batch <= I, where, fmt::format("batch {} out of range", inj.batch));
      need(inj.volume >= -vtol, where, fmt::format("negative injection {:.4f}", inj.volume));
    }
    for (const auto& d : r.deliveries) {
      need(s.depot_index(d.depot).has_value(), where, "unknown depot " + d.depot);
      need(s.product_index(d.product).has_value(), where, "unknown product " + d.product);
      need(d.batch >= 1 && d.batch <= I, where, fmt::format("batch {} out of range", d.batch));
      need(d.volume >= -vtol, where, fmt::format("negative delivery {:.4f}", d.volume));
    }
  }
  VerificationReport rep;
  if (!structural) {
    rep.checks = rec.finish();
    rep.passed = false;
    return rep;
  }

  // Batch products.
  const auto product = batch_products(sch, s);
  for (const auto& r : sch.runs) {
    for (const auto& inj : r.injections) {
      if (product.at(inj.batch) != inj.product) {
        rec.fail("eq30", fmt::format("batch {}", inj.batch),
                 fmt::format("injects {} into a {} batch", inj.product, product.at(inj.batch)));
      }
    }
    for (const auto& d : r.deliveries) {
      auto it = product.find(d.batch);
      if (it == product.end()) {
        rec.fail("eq28", fmt::format("batch {}", d.batch), "delivery from a batch that never existed");
      } else if (it->second != d.product) {
        rec.fail("eq32", fmt::format("batch {}", d.batch),
                 fmt::format("delivers {} from a {} batch", d.product, it->second));
      }
    }
  }
  for (const auto& t : sch.trajectories) {
    auto it = product.find(t.batch);
    if (it != product.end() && !t.product.empty() && t.product != it->second) {
      rec.fail(is_old(t.batch) ? "eq36" : "eq27", fmt::format("batch {}", t.batch),
               fmt::format("recorded as {}, carries {}", t.product, it->second));
    }
  }

  Line line = initial_line(s);
  if (std::abs(line.total() - s.pipeline_volume) > vtol) {
    rec.fail("eq18", "initial", fmt::format("line holds {:.4f} of {:.4f}", line.total(), s.pipeline_volume));
  }
  auto compare_trajectories = [&](std::size_t pos, const std::string& where, const std::string& tag) {
    for (const auto& t : sch.trajectories) {
      if (t.batch < 1 || t.batch > I) continue;
      if (pos < t.size.size() && std::abs(t.size[pos] - line.w[static_cast<std::size_t>(t.batch)]) > vtol) {
        rec.fail(tag, where, fmt::format("batch {} size recorded {:.4f}, replay {:.4f}", t.batch, t.size[pos],
                                         line.w[static_cast<std::size_t>(t.batch)]));
      }
      if (pos < t.upper.size() && std::abs(t.upper[pos] - line.upper(t.batch)) > vtol) {
        rec.fail(tag, where, fmt::format("batch {} upper recorded {:.4f}, replay {:.4f}", t.batch, t.upper[pos],
                                         line.upper(t.batch)));
      }
    }
  };
  compare_trajectories(0, "initial", "eq35");

  std::map<std::pair<std::string, std::string>, double> supplied;  // (source, product)
  double prev_end = 0.0;
  struct Logical {
    Line before;
    PumpingRun run;
    int interval = 0;
  };
  std::optional<Logical> logical;

  // Reachability, per-run delivery bounds and the upstream capacity of each delivery.
  auto check_reach = [&](const Line& before, const Line& after, const PumpingRun& r, const std::string& where, int e,
                         bool check_arrival) {
    for (const auto& inj : r.injections) {
      const double tau = s.sources[*s.source_index(inj.source)].tau;
      if (before.upper(inj.batch) < tau - vtol) {
        rec.fail("eq20", where, fmt::format("batch {} does not reach {} (upper {:.4f} < {:.4f})", inj.batch,
                                            inj.source, before.upper(inj.batch), tau));
      }
      if (before.lower(inj.batch) > tau + vtol) {
        rec.fail("eq21", where, fmt::format("batch {} has passed {} (lower {:.4f} > {:.4f})", inj.batch, inj.source,
                                            before.lower(inj.batch), tau));
      }
    }
    std::map<std::pair<int, std::size_t>, double> by_batch_depot;
    for (const auto& d : r.deliveries) by_batch_depot[{d.batch, *s.depot_index(d.depot)}] += d.volume;
    for (const auto& [key, vol] : by_batch_depot) {
      const auto [i, j] = key;
      const auto& depot = s.depots[j];
      const std::string at = fmt::format("{} batch {} -> {}", where, i, depot.id);
      if (e != 0) {
        const double lo = param_at(depot.delivery_min, static_cast<std::size_t>(e));
        const double hi = param_at(depot.delivery_max, static_cast<std::size_t>(e));
        if (vol < lo - vtol || vol > hi + vtol) {
          rec.fail("eq22", at, fmt::format("delivers {:.4f}, allowed [{:.4f}, {:.4f}]", vol, lo, hi));
        }
      }
      double upstream = 0.0, pumped_in = 0.0;
      for (const auto& inj : r.injections) {
        if (s.sources[*s.source_index(inj.source)].tau < depot.sigma) {
          upstream += inj.volume;
          if (inj.batch == i) pumped_in += inj.volume;
        }
      }
      if (vol > upstream + vtol) {
        rec.fail("eq13", at, fmt::format("delivers {:.4f} with only {:.4f} pumped upstream", vol, upstream));
      }
      if (check_arrival && after.upper(i) < depot.sigma - vtol) {
        rec.fail("eq23", at, fmt::format("batch ends at {:.4f}, short of {:.4f}", after.upper(i), depot.sigma));
      }
      if (before.lower(i) > depot.sigma + vtol) {
        rec.fail("eq24", at, fmt::format("batch starts past the depot ({:.4f} > {:.4f})", before.lower(i), depot.sigma));
      }
      double cumulative = 0.0;
      for (std::size_t j2 = 0; j2 <= j; ++j2) {
        auto it = by_batch_depot.find({i, j2});
        if (it != by_batch_depot.end()) cumulative += it->second;
      }
      const double cap = depot.sigma - before.lower(i) + pumped_in;
      if (cumulative > cap + vtol) {
        rec.fail("eq26", at, fmt::format("{:.4f} delivered up to this depot, only {:.4f} can pass it", cumulative, cap));
      }
    }
  };

  for (std::size_t n = 0; n < sch.runs.size(); ++n) {
    const auto& r = sch.runs[n];
    const auto where = run_at(r, n);

    // Timing.
    if (r.end < r.start - ttol) rec.fail("eq1", where, "ends before it starts");
    if (r.start < prev_end - ttol) {
      rec.fail("eq1", where, fmt::format("starts at {:.3f} before previous end {:.3f}", r.start, prev_end));
    }
    if (r.start < -ttol) rec.fail("eq1", where, "starts before time zero");
    if (r.end > s.horizon + ttol) rec.fail("eq2", where, fmt::format("ends at {:.3f} past the horizon", r.end));
    prev_end = std::max(prev_end, r.end);
    const int e = locate_interval(s, r, ttol);
    if (e == 0) rec.fail("eq3", where, fmt::format("[{:.3f}, {:.3f}] spans an event", r.start, r.end));
    const std::size_t ev = static_cast<std::size_t>(std::max(e, 1));

    // Injections.
    std::map<std::string, int> per_source;
    std::map<std::string, std::pair<double, double>> source_totals;  // volume, duration
    for (const auto& inj : r.injections) {
      if (++per_source[inj.source] > 1) rec.fail("eq6", where, inj.source + " injects into two batches");
      if (inj.duration > r.length() + ttol || inj.duration < -ttol) {
        rec.fail("eq9", where, fmt::format("{} pumps {:.3f} h in a {:.3f} h run", inj.source, inj.duration, r.length()));
      }
      if (inj.volume > vtol) {
        if (inj.volume < s.batch_size_min - vtol || inj.volume > s.batch_size_max + vtol) {
          rec.fail("eq8", where, fmt::format("{} injection {:.4f} outside [{}, {}]", inj.source, inj.volume,
                                             s.batch_size_min, s.batch_size_max));
        }
      }
      auto& tot = source_totals[inj.source];
      tot.first += inj.volume;
      tot.second = std::max(tot.second, inj.duration);
      supplied[{inj.source, inj.product}] += inj.volume;
    }
    if (e != 0) {
      for (const auto& [src_id, tot] : source_totals) {
        const auto& src = s.sources[*s.source_index(src_id)];
        const double lo = param_at(src.rate_min, ev) * tot.second;
        const double hi = param_at(src.rate_max, ev) * tot.second;
        if (tot.first < lo - vtol || tot.first > hi + vtol) {
          rec.fail("eq11", where, fmt::format("{} pumps {:.4f} in {:.3f} h, allowed [{:.4f}, {:.4f}]", src_id,
                                              tot.first, tot.second, lo, hi));
        }
      }
    }

    double q_total = 0.0, d_total = 0.0;
    for (const auto& inj : r.injections) q_total += inj.volume;
    for (const auto& d : r.deliveries) d_total += d.volume;
    Line next = line;
    for (const auto& inj : r.injections) next.w[static_cast<std::size_t>(inj.batch)] += inj.volume;
    for (const auto& d : r.deliveries) next.w[static_cast<std::size_t>(d.batch)] -= d.volume;

    // Pieces of a run split by a halt are judged as one run from the state
    // before the first piece to the state after the last.
    if (r.resumes && logical) {
      auto& acc = logical->run;
      acc.injections.insert(acc.injections.end(), r.injections.begin(), r.injections.end());
      acc.deliveries.insert(acc.deliveries.end(), r.deliveries.begin(), r.deliveries.end());
    } else {
      logical = Logical{line, r, e};
    }
    const bool continues = r.interrupted && n + 1 < sch.runs.size() && sch.runs[n + 1].resumes;
    if (!continues) {
      // A piece whose remainder never ran cannot be held to the arrival condition.
      check_reach(logical->before, next, logical->run, where, logical->interval, !r.interrupted);
      logical.reset();
    }

    if (std::abs(q_total - d_total) >= vtol) {
      rec.fail("eq19", where, fmt::format("injected {:.4f}, delivered {:.4f}", q_total, d_total));
    }
    for (int i = 1; i <= I; ++i) {
      const double w = next.w[static_cast<std::size_t>(i)];
      if (w < -vtol) rec.fail("eq12", fmt::format("{} batch {}", where, i), fmt::format("size {:.4f} < 0", w));
      if (next.upper(i) < line.upper(i) - vtol) {
        rec.fail("eq15", fmt::format("{} batch {}", where, i),
                 fmt::format("moves back from {:.4f} to {:.4f}", line.upper(i), next.upper(i)));
      }
      if (next.upper(i) > s.pipeline_volume + vtol) {
        rec.fail("eq16", fmt::format("{} batch {}", where, i), fmt::format("upper {:.4f} past the line end", next.upper(i)));
      }
      if (next.lower(i) < -vtol) rec.fail("eq17", fmt::format("{} batch {}", where, i), "lower coordinate below 0");
    }
    if (std::abs(next.total() - s.pipeline_volume) > vtol) {
      rec.fail("eq18", where, fmt::format("line holds {:.4f} of {:.4f}", next.total(), s.pipeline_volume));
    }
    line = std::move(next);
    compare_trajectories(n + 1, where, "eq14");
  }

  // Forbidden sequences between physical neighbours.
  std::vector<std::pair<int, std::string>> real(product.begin(), product.end());
  for (std::size_t n = 1; n < real.size(); ++n) {
    const auto& [ia, pa] = real[n - 1];
    const auto& [ib, pb] = real[n];
    if (is_old(ia) && is_old(ib)) continue;
    if (s.is_forbidden(pa, pb)) {
      rec.fail("eq29", fmt::format("batches {}/{}", ia, ib), fmt::format("{} followed by {}", pa, pb));
    }
  }

  // Supply windows.
  for (const auto& src : s.sources) {
    for (const auto& p : s.products) {
      const double got = supplied.count({src.id, p.id}) ? supplied[{src.id, p.id}] : 0.0;
      auto lo = src.supply_min.find(p.id);
      auto hi = src.supply_max.find(p.id);
      if (lo != src.supply_min.end() && got < lo->second - vtol) {
        rec.fail("eqSU", src.id + "/" + p.id, fmt::format("supplies {:.4f} < {:.4f}", got, lo->second));
      }
      if (hi != src.supply_max.end() && got > hi->second + vtol) {
        rec.fail("eqSU", src.id + "/" + p.id, fmt::format("supplies {:.4f} > {:.4f}", got, hi->second));
      }
    }
  }

  // Demand ledger and cost.
  std::map<std::pair<std::string, std::string>, double> got;
  for (const auto& r : sch.runs) {
    for (const auto& d : r.deliveries) got[{d.product, d.depot}] += d.volume;
  }
  std::map<std::pair<std::string, std::string>, double> reported;
  for (const auto& b : sch.backorders) reported[{b.product, b.depot}] += b.volume;

  CostBreakdown cost;
  for (std::size_t n = 1; n < real.size(); ++n) {
    if (real[n - 1].second != real[n].second) cost.interface += s.interface_cost_of(real[n - 1].second, real[n].second);
  }
  for (const auto& r : sch.runs) {
    for (const auto& inj : r.injections) cost.pumping += s.pump_cost(inj.product, *s.source_index(inj.source)) * inj.volume;
  }
  for (std::size_t j = 0; j < s.depots.size(); ++j) {
    for (const auto& p : s.products) {
      DemandLine dl;
      dl.product = p.id;
      dl.depot = s.depots[j].id;
      dl.delivered = got.count({p.id, dl.depot}) ? got[{p.id, dl.depot}] : 0.0;
      dl.demand_min = s.demand_min(p.id, j);
      dl.demand_max = s.demand_max(p.id, j);
      dl.backorder = std::max(0.0, dl.demand_min - dl.delivered);
      const std::string at = p.id + "@" + dl.depot;
      if (dl.delivered > dl.demand_max + vtol) {
        rec.fail("eq34", at, fmt::format("delivered {:.4f} > maximum {:.4f}", dl.delivered, dl.demand_max));
      }
      const double claimed = reported.count({p.id, dl.depot}) ? reported[{p.id, dl.depot}] : 0.0;
      if (std::abs(claimed - dl.backorder) > vtol) {
        rec.fail("eq34", at, fmt::format("reports backorder {:.4f}, shortfall is {:.4f}", claimed, dl.backorder));
      }
      cost.backorder += s.backorder_cost(p.id, j) * dl.backorder;
      if (dl.demand_min > 0 || dl.demand_max > 0 || dl.delivered > 0) rep.demand_ledger.push_back(dl);
    }
  }
  cost.total = cost.interface + cost.pumping + cost.backorder;
  rep.recomputed_cost = cost;
  if (sch.cost.total != 0.0 &&
      std::abs(sch.cost.total - cost.total) > opt.cost_tolerance * std::max(1.0, std::abs(cost.total))) {
    rec.fail("cost", "total", fmt::format("reported {:.4f}, recomputed {:.4f}", sch.cost.total, cost.total));
  }

  rep.passed = rec.ok();
  rep.checks = rec.finish();
  return rep;
}

PipelineState state_at(const Schedule& sch, const Scenario& s, double t) {
  const double end = sch.runs.empty() ? 0.0 : makespan(sch);
  if (t < 0.0 || t > end + 1e-9) {
    throw std::out_of_range(fmt::format("time {} outside [0, {}]", t, end));
  }
  Line line = initial_line(s);
  for (const auto& r : sch.runs) {
    if (r.start >= t) break;
    double f = 1.0;
    if (r.end > t && r.end > r.start) f = (t - r.start) / (r.end - r.start);
    for (const auto& inj : r.injections) {
      if (inj.batch >= 1 && static_cast<std::size_t>(inj.batch) < line.w.size()) {
        line.w[static_cast<std::size_t>(inj.batch)] += f * inj.volume;
      }
    }
    for (const auto& d : r.deliveries) {
      if (d.batch >= 1 && static_cast<std::size_t>(d.batch) < line.w.size()) {
        line.w[static_cast<std::size_t>(d.batch)] -= f * d.volume;
      }
    }
  }
  const auto product = batch_products(sch, s);
  PipelineState st;
  st.time = t;
  const double tol = 1e-9 * std::max(1.0, s.pipeline_volume);
  for (std::size_t i = line.w.size() - 1; i >= 1; --i) {
    if (line.w[i] <= tol) continue;
    const int b = static_cast<int>(i);
    auto it = product.find(b);
    st.segments.push_back({b, sch.batch_id(b), it == product.end() ? std::string() : it->second, line.w[i]});
  }
  return st;
}

const char* mutation_class_name(MutationClass c) {
  switch (c) {
    case MutationClass::Volume: return "volume";
    case MutationClass::TimeShift: return "time-shift";
    case MutationClass::ProductSwap: return "product-swap";
    case MutationClass::DepotSwap: return "depot-swap";
  }
  return "?";
}

MutationReport random_mutation_suite(const Schedule& sch, const Scenario& s, std::size_t n, std::uint64_t seed,
                                     const MutationOptions& opt) {
  if (opt.classes.empty()) throw std::invalid_argument("no mutation classes selected");
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t count) { return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng); };
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto sign = [&] { return std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0; };

  MutationReport rep;
  std::size_t attempts = 0;
  while (rep.tried < n) {
    if (++attempts > 1000 * (n + 1)) throw std::runtime_error("schedule offers nothing to mutate");
    const MutationClass cls = opt.classes[pick(opt.classes.size())];
    Schedule mut = sch;
    std::string what;
    bool applied = false;
    if (!mut.runs.empty()) {
      auto& r = mut.runs[pick(mut.runs.size())];
      switch (cls) {
        case MutationClass::Volume: {
          const std::size_t actions = r.injections.size() + r.deliveries.size();
          if (actions == 0) break;
          const std::size_t a = pick(actions);
          double& vol = a < r.injections.size() ? r.injections[a].volume : r.deliveries[a - r.injections.size()].volume;
          double delta = sign() * uniform(opt.delta_min, opt.delta_max);
          if (vol + delta < 0) delta = -delta;
          vol += delta;
          what = fmt::format("run {} action {} volume {:+.3f}", r.index, a, delta);
          applied = true;
          break;
        }
        case MutationClass::TimeShift: {
          double delta = sign() * uniform(opt.shift_min, opt.shift_max);
          if (r.start + delta < 0) delta = -delta;
          r.start += delta;
          r.end += delta;
          what = fmt::format("run {} shifted {:+.3f} h", r.index, delta);
          applied = true;
          break;
        }
        case MutationClass::ProductSwap: {
          const std::size_t actions = r.injections.size() + r.deliveries.size();
          if (actions == 0 || s.products.size() < 2) break;
          const std::size_t a = pick(actions);
          std::string& prod = a < r.injections.size() ? r.injections[a].product : r.deliveries[a - r.injections.size()].product;
          std::string other;
          do other = s.products[pick(s.products.size())].id;
          while (other == prod);
          what = fmt::format("run {} action {} product {} -> {}", r.index, a, prod, other);
          prod = other;
          applied = true;
          break;
        }
        case MutationClass::DepotSwap: {
          if (r.deliveries.empty() || s.depots.size() < 2) break;
          auto& d = r.deliveries[pick(r.deliveries.size())];
          std::string other;
          do other = s.depots[pick(s.depots.size())].id;
          while (other == d.depot);
          what = fmt::format("run {} delivery of batch {} {} -> {}", r.index, d.batch, d.depot, other);
          d.depot = other;
          applied = true;
          break;
        }
      }
    }
    if (!applied) continue;
    const bool caught = !simulate(mut, s).passed;
    ++rep.tried;
    auto& slot = rep.per_class[mutation_class_name(cls)];
    ++slot.first;
    if (caught) {
      ++rep.caught;
      ++slot.second;
    } else {
      rep.escaped.push_back(std::string(mutation_class_name(cls)) + ": " + what);
    }
  }
  return rep;
}

}  // namespace pipesched
