#include "pipesched/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

namespace pipesched {

using json = nlohmann::json;

std::string format_hours(double h) { return fmt::format("{:.2f}", std::abs(h) < 5e-3 ? 0.0 : h); }

std::string Schedule::batch_id(int batch) const {
  if (const auto* t = trajectory(batch); t && !t->id.empty()) return t->id;
  return fmt::format("slot{}", batch);
}

const BatchTrajectory* Schedule::trajectory(int batch) const {
  for (const auto& t : trajectories) {
    if (t.batch == batch) return &t;
  }
  return nullptr;
}

double makespan(const Schedule& sch) {
  if (sch.runs.empty()) throw std::invalid_argument("makespan of an empty schedule");
  double m = sch.runs.front().end;
  for (const auto& r : sch.runs) m = std::max(m, r.end);
  return m;
}

double delivered(const Schedule& sch, const std::string& product, const std::string& depot) {
  double total = 0.0;
  for (const auto& r : sch.runs) {
    for (const auto& d : r.deliveries) {
      if (d.product == product && d.depot == depot) total += d.volume;
    }
  }
  return total;
}

namespace {

// Product carried by each real slot: old batches from the scenario, new ones
// from the trajectory record or, failing that, from their first injection.
std::map<int, std::string> slot_products(const Schedule& sch, const Scenario& s) {
  std::map<int, std::string> out;
  const auto slots = s.slots();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].kind == BatchSlot::Kind::Old) out[static_cast<int>(i) + 1] = s.old_batches[slots[i].old_index].product;
  }
  for (const auto& t : sch.trajectories) {
    if (!t.product.empty() && !out.count(t.batch)) out[t.batch] = t.product;
  }
  for (const auto& r : sch.runs) {
    for (const auto& inj : r.injections) {
      if (!out.count(inj.batch)) out[inj.batch] = inj.product;
    }
  }
  return out;
}

}  // namespace

std::vector<int> real_batches(const Schedule& sch, const Scenario& s) {
  std::vector<int> out;
  for (const auto& [batch, product] : slot_products(sch, s)) out.push_back(batch);
  return out;
}

CostBreakdown cost_breakdown(const Schedule& sch, const Scenario& s) {
  CostBreakdown c;
  const auto products = slot_products(sch, s);
  for (auto it = products.begin(); it != products.end(); ++it) {
    auto next = std::next(it);
    if (next == products.end()) break;
    if (it->second != next->second) c.interface += s.interface_cost_of(it->second, next->second);
  }
  for (const auto& r : sch.runs) {
    for (const auto& inj : r.injections) {
      auto src = s.source_index(inj.source);
      if (src) c.pumping += s.pump_cost(inj.product, *src) * inj.volume;
    }
  }
  for (std::size_t j = 0; j < s.depots.size(); ++j) {
    for (const auto& p : s.products) {
      const double short_by = s.demand_min(p.id, j) - delivered(sch, p.id, s.depots[j].id);
      if (short_by > 0) c.backorder += s.backorder_cost(p.id, j) * short_by;
    }
  }
  c.total = c.interface + c.pumping + c.backorder;
  return c;
}

void assign_batch_ids(Schedule& sch, const Scenario& s) {
  const auto real = real_batches(sch, s);
  for (auto& t : sch.trajectories) {
    auto it = std::find(real.begin(), real.end(), t.batch);
    t.id = it == real.end() ? std::string() : fmt::format("B{}", it - real.begin() + 1);
  }
}

// ---------------------------------------------------------------------------
// Text rendering

std::string render_text(const Schedule& sch, const Scenario& s) {
  std::ostringstream out;
  out << fmt::format("{:<5}{:>9}{:>9}{:>9}  {}\n", "run", "start", "end", "length", "actions");
  for (const auto& r : sch.runs) {
    std::vector<std::string> actions;
    for (const auto& inj : r.injections) {
      actions.push_back(fmt::format("{} -> {} {} {:.2f} ({} h)", inj.source, sch.batch_id(inj.batch), inj.product,
                                    inj.volume, format_hours(inj.duration)));
    }
    for (const auto& d : r.deliveries) {
      actions.push_back(fmt::format("{} <- {} {} {:.2f}", d.depot, sch.batch_id(d.batch), d.product, d.volume));
    }
    out << fmt::format("{:<5}{:>9}{:>9}{:>9}  ", fmt::format("k{}", r.index), format_hours(r.start),
                       format_hours(r.end), format_hours(r.length()));
    for (std::size_t n = 0; n < actions.size(); ++n) out << (n ? "; " : "") << actions[n];
    out << '\n';
  }
  if (!sch.runs.empty()) out << fmt::format("makespan {} h\n", format_hours(makespan(sch)));
  const auto c = cost_breakdown(sch, s);
  out << fmt::format("cost: interface {:.2f}, pumping {:.2f}, backorder {:.2f}, total {:.2f}\n", c.interface,
                     c.pumping, c.backorder, c.total);
  for (const auto& b : sch.backorders) {
    if (b.volume > 0) out << fmt::format("backorder {} at {}: {:.2f}\n", b.product, b.depot, b.volume);
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// SVG rendering

namespace {

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
                                    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string color_of(const Scenario& s, const std::string& product) {
  auto idx = s.product_index(product);
  if (!idx) return "#cccccc";
  return kPalette[*idx % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

std::string esc(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const Schedule& sch, const Scenario& s) {
  const double label_w = 190, bar_w = 560, row_h = 54, top = 40, bar_h = 18;
  const double pv = s.pipeline_volume > 0 ? s.pipeline_volume : 1.0;
  const std::size_t rows = sch.runs.size() + 1;
  const double width = label_w + bar_w + 40;
  const double height = top + row_h * static_cast<double>(rows) + 40 + 20.0 * static_cast<double>(s.products.size());
  auto x_of = [&](double coord) { return label_w + bar_w * coord / pv; };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height);
  out << "<defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" refX=\"4\" refY=\"4\" orient=\"auto\">"
         "<path d=\"M0,0 L8,4 L0,8 z\" fill=\"#333\"/></marker></defs>\n";

  // Terminal axis.
  for (const auto& src : s.sources) {
    out << fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", x_of(src.tau), top - 22,
                       esc(src.id));
  }
  for (const auto& d : s.depots) {
    out << fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", x_of(d.sigma), top - 8,
                       esc(d.id));
  }

  for (std::size_t row = 0; row < rows; ++row) {
    const double y = top + row_h * static_cast<double>(row);
    const double bar_y = y + 18;
    if (row == 0) {
      out << fmt::format("<text x=\"4\" y=\"{:.1f}\">initial state</text>\n", bar_y + 13);
    } else {
      const auto& r = sch.runs[row - 1];
      out << fmt::format("<text x=\"4\" y=\"{:.1f}\">k{}  {} - {}  ({} h)</text>\n", bar_y + 13, r.index,
                         format_hours(r.start), format_hours(r.end), format_hours(r.length()));
    }
    // Batch segments after this row's run.
    for (const auto& t : sch.trajectories) {
      if (row >= t.size.size() || t.size[row] <= 1e-9) continue;
      const double hi = t.upper[row], lo = hi - t.size[row];
      out << fmt::format(
          "<rect x=\"{:.2f}\" y=\"{:.1f}\" width=\"{:.2f}\" height=\"{:.0f}\" fill=\"{}\" stroke=\"#222\" "
          "stroke-width=\"0.5\"/>\n",
          x_of(lo), bar_y, x_of(hi) - x_of(lo), bar_h, color_of(s, t.product));
      if (x_of(hi) - x_of(lo) > 22) {
        out << fmt::format("<text x=\"{:.2f}\" y=\"{:.1f}\" text-anchor=\"middle\" fill=\"#fff\">{}</text>\n",
                           (x_of(lo) + x_of(hi)) / 2, bar_y + 13, esc(t.id));
      }
    }
    if (row == 0) continue;
    const auto& r = sch.runs[row - 1];
    for (const auto& inj : r.injections) {
      auto src = s.source_index(inj.source);
      if (!src) continue;
      const double x = x_of(s.sources[*src].tau);
      out << fmt::format(
          "<line x1=\"{0:.2f}\" y1=\"{1:.1f}\" x2=\"{0:.2f}\" y2=\"{2:.1f}\" stroke=\"#333\" "
          "marker-end=\"url(#arrow)\"/>\n",
          x, y + 2, bar_y - 1);
      out << fmt::format("<text x=\"{:.2f}\" y=\"{:.1f}\">{:.2f}</text>\n", x + 3, y + 10, inj.volume);
    }
    for (const auto& d : r.deliveries) {
      auto dep = s.depot_index(d.depot);
      if (!dep) continue;
      const double x = x_of(s.depots[*dep].sigma);
      out << fmt::format(
          "<line x1=\"{0:.2f}\" y1=\"{1:.1f}\" x2=\"{0:.2f}\" y2=\"{2:.1f}\" stroke=\"#333\" "
          "marker-end=\"url(#arrow)\"/>\n",
          x, bar_y + bar_h + 1, bar_y + bar_h + 14);
      out << fmt::format("<text x=\"{:.2f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n", x - 3,
                         bar_y + bar_h + 13, d.volume);
    }
  }

  // Legend.
  double ly = top + row_h * static_cast<double>(rows) + 10;
  for (const auto& p : s.products) {
    out << fmt::format("<rect x=\"{:.0f}\" y=\"{:.1f}\" width=\"14\" height=\"12\" fill=\"{}\"/>\n", label_w, ly,
                       color_of(s, p.id));
    out << fmt::format("<text x=\"{:.0f}\" y=\"{:.1f}\">{}</text>\n", label_w + 20, ly + 10, esc(p.name));
    ly += 20;
  }
  out << "</svg>\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// JSON

std::string schedule_to_json(const Schedule& sch) {
  json root;
  root["runs"] = json::array();
  for (const auto& r : sch.runs) {
    json jr{{"index", r.index}, {"start", r.start}, {"end", r.end}, {"interval", r.interval}};
    if (r.interrupted) jr["interrupted"] = true;
    if (r.resumes) jr["resumes"] = true;
    jr["injections"] = json::array();
    for (const auto& i : r.injections) {
      jr["injections"].push_back({{"source", i.source},
                                  {"batch", i.batch},
                                  {"product", i.product},
                                  {"volume", i.volume},
                                  {"duration", i.duration}});
    }
    jr["deliveries"] = json::array();
    for (const auto& d : r.deliveries) {
      jr["deliveries"].push_back({{"depot", d.depot}, {"batch", d.batch}, {"product", d.product}, {"volume", d.volume}});
    }
    root["runs"].push_back(std::move(jr));
  }
  root["trajectories"] = json::array();
  for (const auto& t : sch.trajectories) {
    root["trajectories"].push_back({{"batch", t.batch},
                                    {"id", t.id},
                                    {"product", t.product},
                                    {"old", t.old},
                                    {"upper", t.upper},
                                    {"size", t.size}});
  }
  root["backorders"] = json::array();
  for (const auto& b : sch.backorders) {
    root["backorders"].push_back({{"product", b.product}, {"depot", b.depot}, {"volume", b.volume}});
  }
  root["cost"] = {{"interface", sch.cost.interface},
                  {"pumping", sch.cost.pumping},
                  {"backorder", sch.cost.backorder},
                  {"total", sch.cost.total}};
  if (!sch.runs.empty()) root["makespan"] = makespan(sch);
  return root.dump(2) + "\n";
}

Schedule schedule_from_json(const std::string& text) {
  Schedule sch;
  try {
    const json root = json::parse(text);
    for (const auto& jr : root.at("runs")) {
      PumpingRun r;
      r.index = jr.at("index").get<int>();
      r.start = jr.at("start").get<double>();
      r.end = jr.at("end").get<double>();
      r.interval = jr.value("interval", 1);
      r.interrupted = jr.value("interrupted", false);
      r.resumes = jr.value("resumes", false);
      for (const auto& ji : jr.value("injections", json::array())) {
        r.injections.push_back({ji.at("source").get<std::string>(), ji.at("batch").get<int>(),
                                ji.at("product").get<std::string>(), ji.at("volume").get<double>(),
                                ji.value("duration", r.end - r.start)});
      }
      for (const auto& jd : jr.value("deliveries", json::array())) {
        r.deliveries.push_back({jd.at("depot").get<std::string>(), jd.at("batch").get<int>(),
                                jd.at("product").get<std::string>(), jd.at("volume").get<double>()});
      }
      sch.runs.push_back(std::move(r));
    }
    for (const auto& jt : root.value("trajectories", json::array())) {
      BatchTrajectory t;
      t.batch = jt.at("batch").get<int>();
      t.id = jt.value("id", std::string());
      t.product = jt.value("product", std::string());
      t.old = jt.value("old", false);
      t.upper = jt.value("upper", std::vector<double>{});
      t.size = jt.value("size", std::vector<double>{});
      sch.trajectories.push_back(std::move(t));
    }
    for (const auto& jb : root.value("backorders", json::array())) {
      sch.backorders.push_back(
          {jb.at("product").get<std::string>(), jb.at("depot").get<std::string>(), jb.at("volume").get<double>()});
    }
    if (auto it = root.find("cost"); it != root.end()) {
      sch.cost = {it->value("interface", 0.0), it->value("pumping", 0.0), it->value("backorder", 0.0),
                  it->value("total", 0.0)};
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed schedule document: ") + e.what());
  }
  return sch;
}

}  // namespace pipesched
