#include "pipesched/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace pipesched {

const char* kind_name(VarKind kind) {
  switch (kind) {
    case VarKind::C: return "C";
    case VarKind::L: return "L";
    case VarKind::LS: return "LS";
    case VarKind::Q: return "Q";
    case VarKind::QP: return "QP";
    case VarKind::D: return "D";
    case VarKind::DP: return "DP";
    case VarKind::F: return "F";
    case VarKind::W: return "W";
    case VarKind::B: return "B";
    case VarKind::RC: return "RC";
    case VarKind::PC: return "PC";
    case VarKind::BC: return "BC";
    case VarKind::NP: return "NP";
    case VarKind::v: return "v";
    case VarKind::x: return "x";
    case VarKind::y: return "y";
    case VarKind::b: return "be";
  }
  return "?";
}

bool is_binary_kind(VarKind kind) {
  return kind == VarKind::v || kind == VarKind::x || kind == VarKind::y || kind == VarKind::b;
}

namespace {
constexpr std::size_t kArity[] = {1, 1, 2, 3, 4, 3, 4, 2, 2, 2, 1, 1, 0, 2, 3, 3, 2, 2};
}

VarRef VarRef::make(VarKind kind, std::initializer_list<int> indices) {
  VarRef r;
  r.kind = kind;
  if (indices.size() != kArity[static_cast<std::size_t>(kind)]) {
    throw std::invalid_argument(fmt::format("{} takes {} indices, got {}", kind_name(kind),
                                            kArity[static_cast<std::size_t>(kind)], indices.size()));
  }
  std::copy(indices.begin(), indices.end(), r.idx.begin());
  return r;
}

std::size_t VarRef::arity() const { return kArity[static_cast<std::size_t>(kind)]; }

std::string VarRef::name() const {
  std::string out = kind_name(kind);
  for (std::size_t n = 0; n < arity(); ++n) out += fmt::format("_{}", idx[n]);
  return out;
}

std::size_t VarRefHash::operator()(const VarRef& r) const noexcept {
  std::size_t h = static_cast<std::size_t>(r.kind);
  for (int i : r.idx) h = h * 1000003u ^ static_cast<std::size_t>(i + 7);
  return h;
}

const std::vector<std::string>& constraint_families() {
  static const std::vector<std::string> families = [] {
    std::vector<std::string> f;
    for (int n = 1; n <= 36; ++n) f.push_back(fmt::format("eq{}", n));
    f.insert(f.end(), {"obj38", "obj39", "obj40", "eqSU", "cut"});
    return f;
  }();
  return families;
}

std::size_t ModelInstance::add_variable(VarRef ref, double lower, double upper, bool integer) {
  auto [it, inserted] = lookup_.emplace(ref, variables_.size());
  if (!inserted) throw std::logic_error("duplicate variable " + ref.name());
  variables_.push_back({ref, lower, upper, integer});
  return it->second;
}

void ModelInstance::add_constraint(LinearConstraint c) {
  for (const auto& t : c.terms) {
    if (t.var >= variables_.size()) throw std::logic_error("constraint references an undeclared variable");
    if (!std::isfinite(t.coef)) throw std::logic_error("non-finite coefficient in " + c.tag);
  }
  constraints_.push_back(std::move(c));
}

std::optional<std::size_t> ModelInstance::find(const VarRef& ref) const {
  auto it = lookup_.find(ref);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t ModelInstance::index(const VarRef& ref) const {
  auto found = find(ref);
  if (!found) throw std::out_of_range("undeclared variable " + ref.name());
  return *found;
}

BigM big_m_values(const Scenario& s) {
  BigM m;
  m.time = s.horizon;
  m.volume = s.pipeline_volume + s.batch_size_max;
  m.count = static_cast<double>(s.run_count * s.sources.size());
  return m;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Accumulates the terms of a single linear row.
class Row {
 public:
  Row& add(std::size_t var, double coef) {
    if (coef != 0.0) terms_.push_back({var, coef});
    return *this;
  }
  LinearConstraint finish(Sense sense, double rhs, const char* tag) && {
    return {std::move(terms_), sense, rhs, tag};
  }

 private:
  std::vector<Term> terms_;
};

class Builder {
 public:
  Builder(const Scenario& s, const BuildOptions& opt) : s_(s), opt_(opt), slots_(s.slots()) {
    K_ = static_cast<int>(s.run_count);
    I_ = static_cast<int>(slots_.size());
    S_ = static_cast<int>(s.sources.size());
    J_ = static_cast<int>(s.depots.size());
    P_ = static_cast<int>(s.products.size());
    E_ = static_cast<int>(s.interval_count());
    qmax_ = s.batch_size_max;
    qmin_ = s.batch_size_min;
    pv_ = s.pipeline_volume;
    dmax_ = std::max(s.delivery_bound(), 0.0);
    m_.big_m = big_m_values(s);
    m_.big_m.volume *= opt.m_vol_scale;
    if (!opt.event_mechanism && E_ != 1) {
      throw std::invalid_argument("planning without the event mechanism needs exactly one event interval");
    }
  }

  ModelInstance build() {
    declare();
    sequencing();
    events();
    injections();
    volumes();
    coordinates();
    reachability();
    deliveries();
    products();
    demands();
    initial_state();
    objective();
    if (opt_.reductions) reductions();
    return std::move(m_);
  }

 private:
  std::size_t var(VarKind kind, std::initializer_list<int> idx) const { return m_.index(VarRef::make(kind, idx)); }
  bool is_old(int i) const { return slots_[i - 1].kind == BatchSlot::Kind::Old; }
  const std::string& pid(int p) const { return s_.products[p - 1].id; }
  void emit(Row row, Sense sense, double rhs, const char* tag) {
    m_.add_constraint(std::move(row).finish(sense, rhs, tag));
  }

  // Lower coordinate of slot i at t=0. Batches only move forward, so a slot whose
  // lower end already lies past a source or depot can never touch it again.
  double initial_lower(int i) const {
    double behind = 0.0;
    for (int i2 = i + 1; i2 <= I_; ++i2) {
      if (is_old(i2)) behind += s_.old_batches[slots_[i2 - 1].old_index].volume0;
    }
    return behind;
  }

  void declare() {
    const double h = s_.horizon;
    const double tol = volume_epsilon(s_);
    for (int k = 1; k <= K_; ++k) {
      m_.add_variable(VarRef::make(VarKind::C, {k}), 0, h);
      m_.add_variable(VarRef::make(VarKind::L, {k}), 0, h);
      for (int s = 1; s <= S_; ++s) m_.add_variable(VarRef::make(VarKind::LS, {k, s}), 0, h);
      if (opt_.event_mechanism) {
        for (int e = 1; e <= E_; ++e) m_.add_variable(VarRef::make(VarKind::b, {k, e}), 0, 1, true);
      }
    }
    for (int i = 1; i <= I_; ++i) {
      for (int k = 1; k <= K_; ++k) {
        for (int s = 1; s <= S_; ++s) {
          const bool reach = !opt_.reductions || initial_lower(i) <= s_.sources[s - 1].tau + tol;
          m_.add_variable(VarRef::make(VarKind::v, {i, s, k}), 0, reach ? 1 : 0, true);
          m_.add_variable(VarRef::make(VarKind::Q, {i, s, k}), 0, qmax_);
          for (int p = 1; p <= P_; ++p) m_.add_variable(VarRef::make(VarKind::QP, {i, s, p, k}), 0, qmax_);
        }
        for (int j = 1; j <= J_; ++j) {
          const bool reach = !opt_.reductions || initial_lower(i) <= s_.depots[j - 1].sigma + tol;
          m_.add_variable(VarRef::make(VarKind::x, {i, j, k}), 0, reach ? 1 : 0, true);
          m_.add_variable(VarRef::make(VarKind::D, {i, j, k}), 0, dmax_);
          for (int p = 1; p <= P_; ++p) m_.add_variable(VarRef::make(VarKind::DP, {i, j, p, k}), 0, dmax_);
        }
      }
      for (int k = 0; k <= K_; ++k) {
        m_.add_variable(VarRef::make(VarKind::F, {i, k}), 0, pv_);
        m_.add_variable(VarRef::make(VarKind::W, {i, k}), 0, pv_);
      }
      for (int p = 1; p <= P_; ++p) m_.add_variable(VarRef::make(VarKind::y, {i, p}), 0, 1, true);
      if (i >= 2) {
        for (int p = 1; p <= P_; ++p) m_.add_variable(VarRef::make(VarKind::NP, {i, p}), 0, 1);
      }
      if (i < I_) m_.add_variable(VarRef::make(VarKind::RC, {i}), 0, kInf);
    }
    for (int k = 1; k <= K_; ++k) m_.add_variable(VarRef::make(VarKind::PC, {k}), 0, kInf);
    for (int p = 1; p <= P_; ++p) {
      for (int j = 1; j <= J_; ++j) {
        m_.add_variable(VarRef::make(VarKind::B, {p, j}), 0, std::max(0.0, s_.demand_min(pid(p), j - 1)));
      }
    }
    m_.add_variable(VarRef::make(VarKind::BC, {}), 0, kInf);
  }

  // Runs follow one another and finish inside the horizon.
  void sequencing() {
    for (int k = 1; k <= K_; ++k) {
      if (k > 1) {
        emit(Row().add(var(VarKind::C, {k}), 1).add(var(VarKind::L, {k}), -1).add(var(VarKind::C, {k - 1}), -1),
             Sense::GreaterEqual, 0, "eq1");
      } else if (!opt_.event_mechanism) {
        emit(Row().add(var(VarKind::C, {k}), 1).add(var(VarKind::L, {k}), -1), Sense::GreaterEqual, 0, "eq1");
      }
      emit(Row().add(var(VarKind::C, {k}), 1), Sense::LessEqual, s_.horizon, "eq2");
    }
  }

  // Each run sits entirely inside one event interval.
  void events() {
    if (!opt_.event_mechanism) return;
    const double mt = m_.big_m.time;
    for (int k = 1; k <= K_; ++k) {
      Row one;
      for (int e = 1; e <= E_; ++e) one.add(var(VarKind::b, {k, e}), 1);
      emit(std::move(one), Sense::Equal, 1, "eq3");
      for (int e = 1; e <= E_; ++e) {
        const double t_prev = s_.events[e - 1].time;
        const double t_e = s_.events[e].time;
        emit(Row().add(var(VarKind::C, {k}), 1).add(var(VarKind::L, {k}), -1).add(var(VarKind::b, {k, e}), -t_prev),
             Sense::GreaterEqual, 0, "eq4");
        emit(Row().add(var(VarKind::C, {k}), 1).add(var(VarKind::b, {k, e}), mt - t_e), Sense::LessEqual, mt, "eq5");
      }
    }
  }

  void injections() {
    const double mc = m_.big_m.count;
    const double mvol = m_.big_m.volume;
    double max_rate_min = 0.0;
    for (const auto& src : s_.sources) max_rate_min = std::max(max_rate_min, src.rate_min.max());
    // The lower rate guard must dominate vb_min * L_ks for any admissible L_ks.
    const double m_rate = std::max(mvol, max_rate_min * s_.horizon);

    for (int k = 1; k <= K_; ++k) {
      for (int s = 1; s <= S_; ++s) {
        Row one;
        for (int i = 1; i <= I_; ++i) one.add(var(VarKind::v, {i, s, k}), 1);
        emit(std::move(one), Sense::LessEqual, 1, "eq6");
      }
      if (k > 1) {
        Row cascade;
        for (int s = 1; s <= S_; ++s) {
          for (int i = 1; i <= I_; ++i) {
            cascade.add(var(VarKind::v, {i, s, k}), 1).add(var(VarKind::v, {i, s, k - 1}), -mc);
          }
        }
        emit(std::move(cascade), Sense::LessEqual, 0, "eq7");
      }
      for (int i = 1; i <= I_; ++i) {
        for (int s = 1; s <= S_; ++s) {
          const auto q = var(VarKind::Q, {i, s, k});
          const auto v = var(VarKind::v, {i, s, k});
          emit(Row().add(q, 1).add(v, -qmin_), Sense::GreaterEqual, 0, "eq8");
          emit(Row().add(q, 1).add(v, -qmax_), Sense::LessEqual, 0, "eq8");
        }
      }
      for (int s = 1; s <= S_; ++s) {
        emit(Row().add(var(VarKind::L, {k}), 1).add(var(VarKind::LS, {k, s}), -1), Sense::GreaterEqual, 0, "eq9");
      }
      // Event-guarded rate coupling.
      for (int s = 1; s <= S_; ++s) {
        const auto& src = s_.sources[s - 1];
        const auto ls = var(VarKind::LS, {k, s});
        for (int e = 1; e <= E_; ++e) {
          Row lo, hi;
          for (int i = 1; i <= I_; ++i) {
            lo.add(var(VarKind::Q, {i, s, k}), 1);
            hi.add(var(VarKind::Q, {i, s, k}), 1);
          }
          lo.add(ls, -param_at(src.rate_min, e));
          hi.add(ls, -param_at(src.rate_max, e));
          if (!opt_.event_mechanism) {
            emit(std::move(lo), Sense::GreaterEqual, 0, "eq11");
            emit(std::move(hi), Sense::LessEqual, 0, "eq11");
            continue;
          }
          const auto be = var(VarKind::b, {k, e});
          lo.add(be, -m_rate);
          hi.add(be, mvol);
          emit(std::move(lo), Sense::GreaterEqual, -m_rate, "eq11");
          emit(std::move(hi), Sense::LessEqual, mvol, "eq11");
        }
      }
    }
  }

  void volumes() {
    for (int k = 1; k <= K_; ++k) {
      for (int i = 1; i <= I_; ++i) {
        Row balance;
        balance.add(var(VarKind::W, {i, k}), 1).add(var(VarKind::W, {i, k - 1}), -1);
        for (int s = 1; s <= S_; ++s) balance.add(var(VarKind::Q, {i, s, k}), -1);
        for (int j = 1; j <= J_; ++j) balance.add(var(VarKind::D, {i, j, k}), 1);
        emit(std::move(balance), Sense::Equal, 0, "eq12");
      }
      for (int i = 1; i <= I_; ++i) {
        for (int j = 1; j <= J_; ++j) {
          Row push;
          push.add(var(VarKind::D, {i, j, k}), 1);
          for (int s = 1; s <= S_; ++s) {
            if (s_.sources[s - 1].tau < s_.depots[j - 1].sigma) {
              for (int i2 = 1; i2 <= I_; ++i2) push.add(var(VarKind::Q, {i2, s, k}), -1);
            }
          }
          emit(std::move(push), Sense::LessEqual, 0, "eq13");
        }
      }
    }
  }

  void coordinates() {
    for (int k = 0; k <= K_; ++k) {
      for (int i = 1; i <= I_; ++i) {
        Row tile;
        tile.add(var(VarKind::F, {i, k}), 1).add(var(VarKind::W, {i, k}), -1);
        if (i < I_) tile.add(var(VarKind::F, {i + 1, k}), -1);
        emit(std::move(tile), Sense::Equal, 0, "eq14");
      }
    }
    for (int k = 1; k <= K_; ++k) {
      for (int i = 1; i <= I_; ++i) {
        const auto f = var(VarKind::F, {i, k});
        emit(Row().add(f, 1).add(var(VarKind::F, {i, k - 1}), -1), Sense::GreaterEqual, 0, "eq15");
        emit(Row().add(f, 1), Sense::LessEqual, pv_, "eq16");
        emit(Row().add(f, 1).add(var(VarKind::W, {i, k}), -1), Sense::GreaterEqual, 0, "eq17");
      }
      Row full;
      for (int i = 1; i <= I_; ++i) full.add(var(VarKind::W, {i, k}), 1);
      emit(std::move(full), Sense::Equal, pv_, "eq18");
      Row io;
      for (int i = 1; i <= I_; ++i) {
        for (int s = 1; s <= S_; ++s) io.add(var(VarKind::Q, {i, s, k}), 1);
        for (int j = 1; j <= J_; ++j) io.add(var(VarKind::D, {i, j, k}), -1);
      }
      emit(std::move(io), Sense::Equal, 0, "eq19");
    }
  }

  void reachability() {
    const double mvol = m_.big_m.volume;
    for (int k = 1; k <= K_; ++k) {
      for (int i = 1; i <= I_; ++i) {
        const auto f_prev = var(VarKind::F, {i, k - 1});
        const auto w_prev = var(VarKind::W, {i, k - 1});
        for (int s = 1; s <= S_; ++s) {
          const double tau = s_.sources[s - 1].tau;
          const auto v = var(VarKind::v, {i, s, k});
          emit(Row().add(f_prev, 1).add(v, -tau), Sense::GreaterEqual, 0, "eq20");
          emit(Row().add(f_prev, 1).add(w_prev, -1).add(v, mvol), Sense::LessEqual, tau + mvol, "eq21");
        }
      }
    }
  }

  void deliveries() {
    const double mvol = m_.big_m.volume;
    const double m_guard = std::max(mvol, dmax_);
    for (int k = 1; k <= K_; ++k) {
      for (int i = 1; i <= I_; ++i) {
        const auto f_prev = var(VarKind::F, {i, k - 1});
        const auto w_prev = var(VarKind::W, {i, k - 1});
        for (int j = 1; j <= J_; ++j) {
          const auto& depot = s_.depots[j - 1];
          const auto d = var(VarKind::D, {i, j, k});
          const auto x = var(VarKind::x, {i, j, k});
          for (int e = 1; e <= E_; ++e) {
            if (!opt_.event_mechanism) {
              emit(Row().add(d, 1).add(x, -param_at(depot.delivery_min, e)), Sense::GreaterEqual, 0, "eq22");
              emit(Row().add(d, 1).add(x, -param_at(depot.delivery_max, e)), Sense::LessEqual, 0, "eq22");
              continue;
            }
            const auto be = var(VarKind::b, {k, e});
            emit(Row().add(d, 1).add(x, -param_at(depot.delivery_min, e)).add(be, -m_guard), Sense::GreaterEqual,
                 -m_guard, "eq22");
            emit(Row().add(d, 1).add(x, -param_at(depot.delivery_max, e)).add(be, m_guard), Sense::LessEqual,
                 m_guard, "eq22");
          }
          emit(Row().add(var(VarKind::F, {i, k}), 1).add(x, -depot.sigma), Sense::GreaterEqual, 0, "eq23");
          emit(Row().add(f_prev, 1).add(w_prev, -1).add(x, mvol), Sense::LessEqual, depot.sigma + mvol, "eq24");

          // Cumulative deliveries to depots up to j are limited by the volume of
          // batch i upstream of sigma_j plus what upstream sources add to it.
          Row cap;
          for (int j2 = 1; j2 <= j; ++j2) cap.add(var(VarKind::D, {i, j2, k}), 1);
          cap.add(f_prev, 1).add(w_prev, -1);
          for (int s = 1; s <= S_; ++s) {
            if (s_.sources[s - 1].tau < depot.sigma) cap.add(var(VarKind::Q, {i, s, k}), -1);
          }
          cap.add(x, pv_ - depot.sigma);
          emit(std::move(cap), Sense::LessEqual, pv_, "eq26");
        }
      }
    }
  }

  void products() {
    const double mc = m_.big_m.count;
    for (int i = 1; i <= I_; ++i) {
      Row one;
      for (int p = 1; p <= P_; ++p) one.add(var(VarKind::y, {i, p}), 1);
      emit(std::move(one), Sense::LessEqual, 1, "eq27");
      if (!is_old(i)) {
        Row lo, hi;
        for (int p = 1; p <= P_; ++p) {
          lo.add(var(VarKind::y, {i, p}), 1);
          hi.add(var(VarKind::y, {i, p}), -mc);
        }
        for (int s = 1; s <= S_; ++s) {
          for (int k = 1; k <= K_; ++k) {
            lo.add(var(VarKind::v, {i, s, k}), -1);
            hi.add(var(VarKind::v, {i, s, k}), 1);
          }
        }
        emit(std::move(lo), Sense::LessEqual, 0, "eq28");
        emit(std::move(hi), Sense::LessEqual, 0, "eq28");
      }
    }

    // NP_{i,p} >= [the first real batch at or behind slot i carries p]. Minimisation
    // keeps it tight, so interfaces and forbidden sequences see physical neighbours
    // even when fictitious slots sit between two real batches.
    for (int i = 2; i <= I_; ++i) {
      for (int p = 1; p <= P_; ++p) {
        const auto np = var(VarKind::NP, {i, p});
        emit(Row().add(np, 1).add(var(VarKind::y, {i, p}), -1), Sense::GreaterEqual, 0, "obj38");
        if (i < I_) {
          Row carry;
          carry.add(np, 1).add(var(VarKind::NP, {i + 1, p}), -1);
          for (int q = 1; q <= P_; ++q) carry.add(var(VarKind::y, {i, q}), 1);
          emit(std::move(carry), Sense::GreaterEqual, 0, "obj38");
        }
      }
    }

    for (int i = 2; i <= I_; ++i) {
      if (is_old(i - 1) && is_old(i)) continue;
      for (const auto& [ahead, behind] : s_.forbidden_pairs) {
        auto pa = s_.product_index(ahead);
        auto pb = s_.product_index(behind);
        if (!pa || !pb) continue;
        emit(Row()
                 .add(var(VarKind::y, {i - 1, static_cast<int>(*pa) + 1}), 1)
                 .add(var(VarKind::NP, {i, static_cast<int>(*pb) + 1}), 1),
             Sense::LessEqual, 1, "eq29");
      }
    }

    for (int k = 1; k <= K_; ++k) {
      for (int i = 1; i <= I_; ++i) {
        for (int s = 1; s <= S_; ++s) {
          Row split;
          for (int p = 1; p <= P_; ++p) {
            const auto qp = var(VarKind::QP, {i, s, p, k});
            emit(Row().add(qp, 1).add(var(VarKind::y, {i, p}), -qmax_), Sense::LessEqual, 0, "eq30");
            split.add(qp, 1);
          }
          split.add(var(VarKind::Q, {i, s, k}), -1);
          emit(std::move(split), Sense::Equal, 0, "eq31");
        }
        for (int j = 1; j <= J_; ++j) {
          Row split;
          for (int p = 1; p <= P_; ++p) {
            const auto dp = var(VarKind::DP, {i, j, p, k});
            emit(Row().add(dp, 1).add(var(VarKind::y, {i, p}), -dmax_), Sense::LessEqual, 0, "eq32");
            split.add(dp, 1);
          }
          split.add(var(VarKind::D, {i, j, k}), -1);
          emit(std::move(split), Sense::Equal, 0, "eq33");
        }
      }
    }
  }

  void demands() {
    for (int p = 1; p <= P_; ++p) {
      for (int j = 1; j <= J_; ++j) {
        Row lo, hi;
        for (int k = 1; k <= K_; ++k) {
          for (int i = 1; i <= I_; ++i) {
            lo.add(var(VarKind::DP, {i, j, p, k}), 1);
            hi.add(var(VarKind::DP, {i, j, p, k}), 1);
          }
        }
        lo.add(var(VarKind::B, {p, j}), 1);
        emit(std::move(lo), Sense::GreaterEqual, s_.demand_min(pid(p), j - 1), "eq34");
        emit(std::move(hi), Sense::LessEqual, s_.demand_max(pid(p), j - 1), "eq34");
      }
    }
    if (opt_.paper_fidelity) return;
    for (int s = 1; s <= S_; ++s) {
      const auto& src = s_.sources[s - 1];
      for (int p = 1; p <= P_; ++p) {
        auto lo = src.supply_min.find(pid(p));
        auto hi = src.supply_max.find(pid(p));
        if (lo == src.supply_min.end() && hi == src.supply_max.end()) continue;
        auto total = [&] {
          Row r;
          for (int k = 1; k <= K_; ++k) {
            for (int i = 1; i <= I_; ++i) r.add(var(VarKind::QP, {i, s, p, k}), 1);
          }
          return r;
        };
        if (lo != src.supply_min.end()) emit(total(), Sense::GreaterEqual, lo->second, "eqSU");
        if (hi != src.supply_max.end()) emit(total(), Sense::LessEqual, hi->second, "eqSU");
      }
    }
  }

  void initial_state() {
    // Upper coordinate of slot i at t=0 is the old volume at or behind it.
    for (int i = 1; i <= I_; ++i) {
      double behind = 0.0;
      for (int i2 = i; i2 <= I_; ++i2) {
        if (is_old(i2)) behind += s_.old_batches[slots_[i2 - 1].old_index].volume0;
      }
      emit(Row().add(var(VarKind::F, {i, 0}), 1), Sense::Equal, behind, "eq35");
      if (is_old(i)) {
        auto p = s_.product_index(s_.old_batches[slots_[i - 1].old_index].product);
        emit(Row().add(var(VarKind::y, {i, static_cast<int>(p.value()) + 1}), 1), Sense::Equal, 1, "eq36");
      }
    }
  }

  void objective() {
    double min_cost = kInf;
    auto note = [&](double c) {
      if (c > 0) min_cost = std::min(min_cost, c);
    };

    for (int i = 1; i < I_; ++i) {
      const auto rc = var(VarKind::RC, {i});
      for (int p = 1; p <= P_; ++p) {
        for (int q = 1; q <= P_; ++q) {
          if (p == q) continue;
          const double cif = s_.interface_cost_of(pid(p), pid(q));
          if (cif <= 0) continue;
          note(cif);
          emit(Row().add(rc, 1).add(var(VarKind::y, {i, p}), -cif).add(var(VarKind::NP, {i + 1, q}), -cif),
               Sense::GreaterEqual, -cif, "obj38");
        }
      }
    }
    for (int k = 1; k <= K_; ++k) {
      Row pc;
      pc.add(var(VarKind::PC, {k}), 1);
      for (int i = 1; i <= I_; ++i) {
        for (int s = 1; s <= S_; ++s) {
          for (int p = 1; p <= P_; ++p) {
            const double cin = s_.pump_cost(pid(p), s - 1);
            note(cin);
            pc.add(var(VarKind::QP, {i, s, p, k}), -cin);
          }
        }
      }
      emit(std::move(pc), Sense::Equal, 0, "obj39");
    }
    Row bc;
    bc.add(var(VarKind::BC, {}), 1);
    for (int p = 1; p <= P_; ++p) {
      for (int j = 1; j <= J_; ++j) {
        const double cb = s_.backorder_cost(pid(p), j - 1);
        note(cb);
        bc.add(var(VarKind::B, {p, j}), -cb);
      }
    }
    emit(std::move(bc), Sense::Equal, 0, "obj40");

    auto& obj = m_.objective();
    for (int i = 1; i < I_; ++i) obj.push_back({var(VarKind::RC, {i}), 1.0});
    for (int k = 1; k <= K_; ++k) obj.push_back({var(VarKind::PC, {k}), 1.0});
    obj.push_back({var(VarKind::BC, {}), 1.0});

    m_.makespan_var = var(VarKind::C, {K_});
    if (opt_.tie_break) {
      m_.tie_break = 1e-4 * (std::isfinite(min_cost) ? min_cost : 1.0);
      obj.push_back({*m_.makespan_var, m_.tie_break});
    }
  }

  // Valid inequalities that leave every optimal plan intact.
  void reductions() {
    for (int i = 2; i <= I_; ++i) {
      Row one;
      for (int p = 1; p <= P_; ++p) one.add(var(VarKind::NP, {i, p}), 1);
      emit(std::move(one), Sense::LessEqual, 1, "cut");
    }
    // Aggregated interface epigraph: one row per product on either side.
    for (int i = 1; i < I_; ++i) {
      const auto rc = var(VarKind::RC, {i});
      for (int q = 1; q <= P_; ++q) {
        double big = 0.0;
        Row r;
        r.add(rc, 1);
        for (int p = 1; p <= P_; ++p) {
          const double c = p == q ? 0.0 : s_.interface_cost_of(pid(p), pid(q));
          big = std::max(big, c);
          r.add(var(VarKind::y, {i, p}), -c);
        }
        if (big <= 0) continue;
        r.add(var(VarKind::NP, {i + 1, q}), -big);
        emit(std::move(r), Sense::GreaterEqual, -big, "cut");
      }
      for (int p = 1; p <= P_; ++p) {
        double big = 0.0;
        Row r;
        r.add(rc, 1);
        for (int q = 1; q <= P_; ++q) {
          const double c = p == q ? 0.0 : s_.interface_cost_of(pid(p), pid(q));
          big = std::max(big, c);
          r.add(var(VarKind::NP, {i + 1, q}), -c);
        }
        if (big <= 0) continue;
        r.add(var(VarKind::y, {i, p}), -big);
        emit(std::move(r), Sense::GreaterEqual, -big, "cut");
      }
    }
    for (int i = 1; i <= I_; ++i) {
      if (is_old(i)) continue;
      for (int k = 1; k <= K_; ++k) {
        for (int s = 1; s <= S_; ++s) {
          Row r;
          r.add(var(VarKind::v, {i, s, k}), 1);
          for (int p = 1; p <= P_; ++p) r.add(var(VarKind::y, {i, p}), -1);
          emit(std::move(r), Sense::LessEqual, 0, "cut");
        }
        for (int j = 1; j <= J_; ++j) {
          Row r;
          r.add(var(VarKind::x, {i, j, k}), 1);
          for (int p = 1; p <= P_; ++p) r.add(var(VarKind::y, {i, p}), -1);
          emit(std::move(r), Sense::LessEqual, 0, "cut");
        }
      }
      // Fictitious slots inside one gap are interchangeable; real ones come first.
      if (i > 1 && !is_old(i - 1)) {
        Row r;
        for (int p = 1; p <= P_; ++p) r.add(var(VarKind::y, {i, p}), 1).add(var(VarKind::y, {i - 1, p}), -1);
        emit(std::move(r), Sense::LessEqual, 0, "cut");
      }
    }
  }

  const Scenario& s_;
  BuildOptions opt_;
  std::vector<BatchSlot> slots_;
  ModelInstance m_;
  int K_ = 0, I_ = 0, S_ = 0, J_ = 0, P_ = 0, E_ = 0;
  double qmax_ = 0, qmin_ = 0, pv_ = 0, dmax_ = 0;
};

}  // namespace

ModelInstance build_model(const Scenario& s, const BuildOptions& options) {
  if (auto violations = validate(s); !violations.empty()) {
    throw ScenarioError(violations.front().field, "cannot build model: " + violations.front().message);
  }
  return Builder(s, options).build();
}

ModelStats model_stats(const ModelInstance& m) {
  ModelStats st;
  for (const auto& v : m.variables()) {
    ++st.variables_per_kind[kind_name(v.ref.kind)];
    ++st.variables;
    if (v.integer) ++st.binaries;
  }
  for (const auto& c : m.constraints()) {
    ++st.constraints_per_tag[c.tag];
    ++st.constraints;
    st.nonzeros += c.terms.size();
  }
  return st;
}

std::string format_stats(const ModelStats& st) {
  std::ostringstream out;
  out << fmt::format("variables {} (binary {}), constraints {}, nonzeros {}\n", st.variables, st.binaries,
                     st.constraints, st.nonzeros);
  out << "constraints by family:";
  for (const auto& tag : constraint_families()) {
    auto it = st.constraints_per_tag.find(tag);
    if (it != st.constraints_per_tag.end()) out << fmt::format(" {}={}", tag, it->second);
  }
  out << "\nvariables by kind:";
  for (const auto& [kind, n] : st.variables_per_kind) out << fmt::format(" {}={}", kind, n);
  out << '\n';
  return out.str();
}

std::string to_algebraic(const ModelInstance& m) {
  std::ostringstream out;
  out << "minimize";
  for (const auto& t : m.objective()) out << fmt::format(" {:+g}*{}", t.coef, m.variables()[t.var].ref.name());
  out << '\n';
  std::map<std::string, std::size_t> ordinal;
  for (const auto& c : m.constraints()) {
    out << c.tag << '_' << ++ordinal[c.tag] << ':';
    for (const auto& t : c.terms) out << fmt::format(" {:+g}*{}", t.coef, m.variables()[t.var].ref.name());
    const char* op = c.sense == Sense::LessEqual ? "<=" : c.sense == Sense::Equal ? "=" : ">=";
    out << fmt::format(" {} {:g}\n", op, c.rhs);
  }
  return out.str();
}

}  // namespace pipesched
