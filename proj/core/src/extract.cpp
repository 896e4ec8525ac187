#include "pipesched/extract.hpp"

#include <cmath>

#include <fmt/format.h>

namespace pipesched {

Schedule extract_schedule(const Solution& sol, const ModelInstance& m, const Scenario& s) {
  if (sol.status != SolveStatus::Optimal && sol.status != SolveStatus::Feasible &&
      sol.status != SolveStatus::TimeLimit) {
    throw ExtractionError(fmt::format("cannot extract a schedule from a {} solution", status_name(sol.status)));
  }
  if (!sol.has_values()) throw ExtractionError("solution carries no variable values");
  for (std::size_t n = 0; n < m.variables().size(); ++n) {
    const auto& v = m.variables()[n];
    if (!v.integer) continue;
    const double x = sol.values[n];
    if (std::abs(x - std::round(x)) > kIntegralityTolerance) {
      throw ExtractionError(fmt::format("binary {} = {} violates integrality", v.ref.name(), x));
    }
  }

  const auto slots = s.slots();
  const int K = static_cast<int>(s.run_count);
  const int I = static_cast<int>(slots.size());
  const int S = static_cast<int>(s.sources.size());
  const int J = static_cast<int>(s.depots.size());
  const int P = static_cast<int>(s.products.size());
  const int E = static_cast<int>(s.interval_count());
  const double tol = volume_epsilon(s);
  auto val = [&](VarKind kind, std::initializer_list<int> idx) { return sol.value(m, VarRef::make(kind, idx)); };
  auto on = [&](VarKind kind, std::initializer_list<int> idx) { return val(kind, idx) > 0.5; };

  std::vector<std::string> product(I + 1);
  for (int i = 1; i <= I; ++i) {
    for (int p = 1; p <= P; ++p) {
      if (on(VarKind::y, {i, p})) product[i] = s.products[p - 1].id;
    }
  }
  auto dominant = [&](VarKind kind, int i, int t, int k) {
    int best = 0;
    double best_v = -1.0;
    for (int p = 1; p <= P; ++p) {
      const double x = val(kind, {i, t, p, k});
      if (x > best_v) best_v = x, best = p;
    }
    return s.products[best - 1].id;
  };

  Schedule sch;
  std::vector<int> kept;
  for (int k = 1; k <= K; ++k) {
    PumpingRun r;
    r.index = k;
    r.end = val(VarKind::C, {k});
    r.start = r.end - val(VarKind::L, {k});
    for (int e = 1; e <= E; ++e) {
      if (m.find(VarRef::make(VarKind::b, {k, e})) && on(VarKind::b, {k, e})) r.interval = e;
    }
    for (int s_ = 1; s_ <= S; ++s_) {
      for (int i = 1; i <= I; ++i) {
        const double q = val(VarKind::Q, {i, s_, k});
        if (q <= tol) continue;
        const std::string prod = product[i].empty() ? dominant(VarKind::QP, i, s_, k) : product[i];
        r.injections.push_back({s.sources[s_ - 1].id, i, prod, q, val(VarKind::LS, {k, s_})});
      }
    }
    for (int j = 1; j <= J; ++j) {
      for (int i = 1; i <= I; ++i) {
        const double d = val(VarKind::D, {i, j, k});
        if (d <= tol) continue;
        const std::string prod = product[i].empty() ? dominant(VarKind::DP, i, j, k) : product[i];
        r.deliveries.push_back({s.depots[j - 1].id, i, prod, d});
      }
    }
    if (r.injections.empty() && r.deliveries.empty()) continue;
    kept.push_back(k);
    sch.runs.push_back(std::move(r));
  }

  for (int i = 1; i <= I; ++i) {
    const bool old = slots[i - 1].kind == BatchSlot::Kind::Old;
    if (!old && product[i].empty()) continue;
    BatchTrajectory t;
    t.batch = i;
    t.old = old;
    t.product = old ? s.old_batches[slots[i - 1].old_index].product : product[i];
    t.upper.push_back(val(VarKind::F, {i, 0}));
    t.size.push_back(val(VarKind::W, {i, 0}));
    for (int k : kept) {
      t.upper.push_back(val(VarKind::F, {i, k}));
      t.size.push_back(val(VarKind::W, {i, k}));
    }
    sch.trajectories.push_back(std::move(t));
  }
  assign_batch_ids(sch, s);

  for (int p = 1; p <= P; ++p) {
    for (int j = 1; j <= J; ++j) {
      const double b = val(VarKind::B, {p, j});
      if (b > tol) sch.backorders.push_back({s.products[p - 1].id, s.depots[j - 1].id, b});
    }
  }
  sch.cost = cost_breakdown(sch, s);
  return sch;
}

}  // namespace pipesched
