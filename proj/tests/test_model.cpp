#include <algorithm>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "pipesched/model.hpp"
#include "random_scenario.hpp"

using namespace pipesched;
using pipesched::testing::data_path;
using pipesched::testing::toy_scenario;

namespace {

// Row and column counts written directly from the index sets of each family.
struct Dims {
  std::size_t I, K, S, J, P, E, old, fresh, pos_pairs, forb_rows, supply;
};

Dims dims(const Scenario& s) {
  Dims d{};
  d.old = s.old_batches.size();
  d.fresh = s.new_batch_count;
  d.I = d.old + d.fresh;
  d.K = s.run_count;
  d.S = s.sources.size();
  d.J = s.depots.size();
  d.P = s.products.size();
  d.E = s.interval_count();
  for (const auto& [pair, c] : s.interface_cost) d.pos_pairs += pair.first != pair.second && c > 0;
  const auto slots = s.slots();
  std::size_t adjacent = 0;
  for (std::size_t i = 1; i < slots.size(); ++i) {
    adjacent += !(slots[i - 1].kind == BatchSlot::Kind::Old && slots[i].kind == BatchSlot::Kind::Old);
  }
  d.forb_rows = adjacent * s.forbidden_pairs.size();
  for (const auto& src : s.sources) d.supply += src.supply_min.size() + src.supply_max.size();
  return d;
}

std::map<std::string, std::size_t> expected_rows(const Dims& d) {
  const auto I = d.I, K = d.K, S = d.S, J = d.J, P = d.P, E = d.E;
  std::map<std::string, std::size_t> m{
      {"eq1", K - 1},          {"eq2", K},
      {"eq3", K},              {"eq4", K * E},
      {"eq5", K * E},          {"eq6", K * S},
      {"eq7", K - 1},          {"eq8", 2 * I * S * K},
      {"eq9", K * S},          {"eq11", 2 * K * S * E},
      {"eq12", K * I},         {"eq13", K * I * J},
      {"eq14", (K + 1) * I},   {"eq15", K * I},
      {"eq16", K * I},         {"eq17", K * I},
      {"eq18", K},             {"eq19", K},
      {"eq20", K * I * S},     {"eq21", K * I * S},
      {"eq22", 2 * K * I * J * E},
      {"eq23", K * I * J},     {"eq24", K * I * J},
      {"eq26", K * I * J},     {"eq27", I},
      {"eq28", 2 * d.fresh},   {"eq29", d.forb_rows},
      {"eq30", K * I * S * P}, {"eq31", K * I * S},
      {"eq32", K * I * J * P}, {"eq33", K * I * J},
      {"eq34", 2 * P * J},     {"eq35", I},
      {"eq36", d.old},         {"eqSU", d.supply},
      {"obj38", (I - 1) * d.pos_pairs + (I - 1) * P + (I - 2) * P},
      {"obj39", K},            {"obj40", 1},
  };
  std::erase_if(m, [](const auto& kv) { return kv.second == 0; });
  return m;
}

std::map<std::string, std::size_t> expected_columns(const Dims& d) {
  const auto I = d.I, K = d.K, S = d.S, J = d.J, P = d.P, E = d.E;
  return {{"C", K},         {"L", K},         {"LS", K * S},     {"PC", K},         {"be", K * E},
          {"v", I * S * K}, {"Q", I * S * K}, {"QP", I * S * P * K},
          {"x", I * J * K}, {"D", I * J * K}, {"DP", I * J * P * K},
          {"F", I * (K + 1)},                 {"W", I * (K + 1)},
          {"y", I * P},     {"NP", (I - 1) * P}, {"RC", I - 1},  {"B", P * J},      {"BC", 1}};
}

std::set<std::string> tags(const ModelInstance& m) {
  std::set<std::string> out;
  for (const auto& c : m.constraints()) out.insert(c.tag);
  return out;
}

}  // namespace

TEST_CASE("case-study model sizes match the index-set formulas") {
  const auto s = load_scenario(data_path("case_study.json"));
  const auto st = model_stats(build_model(s));
  const auto d = dims(s);
  CHECK(st.constraints_per_tag == expected_rows(d));
  CHECK(st.variables_per_kind == expected_columns(d));

  std::size_t binaries = d.K * d.E + d.I * d.S * d.K + d.I * d.J * d.K + d.I * d.P;
  CHECK(st.binaries == binaries);
}

TEST_CASE("sizes match the formulas on random shapes") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto s = pipesched::testing::random_small_scenario(seed, {5, 4});
    if (seed % 3 == 0) s.forbidden_pairs = {{s.products[0].id, s.products[1].id}};
    if (seed % 4 == 0) s.sources[1].supply_max[s.products[0].id] = 10;
    REQUIRE(validate(s).empty());
    CAPTURE(seed);
    const auto st = model_stats(build_model(s));
    const auto d = dims(s);
    CHECK(st.constraints_per_tag == expected_rows(d));
    CHECK(st.variables_per_kind == expected_columns(d));
  }
}

TEST_CASE("no rows are tagged eq10 or eq25 and every tag is a known family") {
  const auto m = build_model(load_scenario(data_path("case_study_maintenance.json")));
  const auto t = tags(m);
  CHECK_FALSE(t.count("eq10"));
  CHECK_FALSE(t.count("eq25"));
  const auto& fam = constraint_families();
  for (const auto& tag : t) CHECK(std::find(fam.begin(), fam.end(), tag) != fam.end());
}

TEST_CASE("big-M values") {
  const auto s = toy_scenario();
  const auto bm = big_m_values(s);
  CHECK(bm.time == 50);
  CHECK(bm.volume == 40);
  CHECK(bm.count == 4);

  BuildOptions opt;
  opt.m_vol_scale = 2;
  CHECK(build_model(s, opt).big_m.volume == 80);
}

TEST_CASE("tie-break adds a small makespan term") {
  const auto s = toy_scenario();
  const auto plain = build_model(s);
  CHECK(plain.tie_break == 0);
  CHECK(plain.objective().size() == s.old_batches.size() + s.new_batch_count - 1 + s.run_count + 1);

  BuildOptions opt;
  opt.tie_break = true;
  const auto m = build_model(s, opt);
  REQUIRE(m.makespan_var.has_value());
  CHECK(m.variables()[*m.makespan_var].ref == VarRef::make(VarKind::C, {2}));
  CHECK(m.tie_break > 0);
  CHECK(m.tie_break <= 1e-4 * 1.0 + 1e-12);
  CHECK(m.objective().size() == plain.objective().size() + 1);
}

TEST_CASE("without the event mechanism the interval variables disappear") {
  const auto cs = load_scenario(data_path("case_study.json"));
  BuildOptions off;
  off.event_mechanism = false;
  const auto m = build_model(cs, off);
  const auto st = model_stats(m);
  CHECK_FALSE(st.variables_per_kind.count("be"));
  for (const char* t : {"eq3", "eq4", "eq5"}) CHECK_FALSE(st.constraints_per_tag.count(t));
  CHECK(st.constraints_per_tag.at("eq11") == 2 * 9 * 2);

  CHECK_THROWS_AS(build_model(toy_scenario(), off), std::invalid_argument);
}

TEST_CASE("optional families") {
  auto s = toy_scenario();
  s.sources[0].supply_max["A"] = 15;
  CHECK(tags(build_model(s)).count("eqSU"));
  BuildOptions fid;
  fid.paper_fidelity = true;
  CHECK_FALSE(tags(build_model(s, fid)).count("eqSU"));

  CHECK_FALSE(tags(build_model(s)).count("cut"));
  BuildOptions red;
  red.reductions = true;
  CHECK(tags(build_model(s, red)).count("cut"));
}

TEST_CASE("variable naming") {
  CHECK(VarRef::make(VarKind::QP, {3, 1, 2, 4}).name() == "QP_3_1_2_4");
  CHECK(VarRef::make(VarKind::b, {2, 1}).name() == "be_2_1");
  CHECK(VarRef::make(VarKind::BC, {}).name() == "BC");
  CHECK(is_binary_kind(VarKind::y));
  CHECK_FALSE(is_binary_kind(VarKind::F));

  const auto m = build_model(toy_scenario());
  std::set<std::string> names;
  for (const auto& v : m.variables()) names.insert(v.ref.name());
  CHECK(names.size() == m.variables().size());
  CHECK(m.find(VarRef::make(VarKind::F, {4, 0})).has_value());
  CHECK_THROWS_AS(m.index(VarRef::make(VarKind::F, {9, 0})), std::out_of_range);
}

TEST_CASE("initial coordinates are fixed from the old batches") {
  const auto s = toy_scenario();
  const auto m = build_model(s);
  auto bounds = [&](VarKind k, std::initializer_list<int> idx) {
    const auto& v = m.variables()[m.index(VarRef::make(k, idx))];
    return std::pair{v.lower, v.upper};
  };
  // Slot 1 (far end) spans [10, 20], slot 2 spans [0, 10]; new slots are empty at the origin.
  CHECK(bounds(VarKind::W, {1, 0}).second >= 10);
  const auto& rows = m.constraints();
  const bool has_eq35 = std::any_of(rows.begin(), rows.end(), [](const auto& c) { return c.tag == "eq35"; });
  CHECK(has_eq35);
}

TEST_CASE("algebraic dump lists rows under their family tags") {
  const auto m = build_model(toy_scenario());
  const auto text = to_algebraic(m);
  CHECK(text.find("eq11_") != std::string::npos);
  CHECK(text.find("eq26_") != std::string::npos);
  CHECK(text.find("eq10_") == std::string::npos);
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines >= m.constraints().size());

  const auto summary = format_stats(model_stats(m));
  CHECK(summary.find("constraints by family") != std::string::npos);
}
