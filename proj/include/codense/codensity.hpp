#pragma once

// One application of the pulled-back codensity lifting. Exact for the eqrel
// fiber (legitimate observations are the finitely many unions of blocks), via
// per-leaf closed forms / an in-repo LP for the pseudometric fiber
// (Kantorovich for Dist + expected value, Hausdorff for Pow + sup/inf), via
// exact signature splits for the real-valued kernel at finite scale, and via
// a brute-force grid oracle for cross-checking the exact evaluators.

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "codense/errors.hpp"
#include "codense/fiber.hpp"
#include "codense/modal_eval.hpp"

namespace codense {

// ---------------------------------------------------------------------------
// Dense-simplex LP: maximize c.x subject to A x <= b, x >= 0, all b >= 0.
// Bland's rule on both pivots keeps runs deterministic and cycle-free.
class SimplexLP {
 public:
  SimplexLP(int num_vars, std::vector<std::vector<double>> rows, std::vector<double> rhs)
      : n_(num_vars), m_(static_cast<int>(rows.size())), rows_(std::move(rows)), rhs_(std::move(rhs)) {}

  double maximize(const std::vector<double>& c, int iteration_limit = 20000) const {
    int cols = n_ + m_;
    std::vector<std::vector<double>> t(m_ + 1, std::vector<double>(cols + 1, 0.0));
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) t[i][j] = rows_[i][j];
      t[i][n_ + i] = 1.0;
      t[i][cols] = rhs_[i];
    }
    for (int j = 0; j < n_; ++j) t[m_][j] = -c[j];
    std::vector<int> basis(m_);
    for (int i = 0; i < m_; ++i) basis[i] = n_ + i;

    const double eps = 1e-9;
    for (int iter = 0; iter < iteration_limit; ++iter) {
      int enter = -1;
      for (int j = 0; j < cols; ++j)
        if (t[m_][j] < -eps) {
          enter = j;
          break;  // Bland: smallest improving index
        }
      if (enter < 0) return t[m_][cols];
      int leave = -1;
      double best_ratio = 0;
      for (int i = 0; i < m_; ++i) {
        if (t[i][enter] > eps) {
          double ratio = t[i][cols] / t[i][enter];
          if (leave < 0 || ratio < best_ratio - eps ||
              (std::abs(ratio - best_ratio) <= eps && basis[i] < basis[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) throw lp_error("LP unbounded");
      double piv = t[leave][enter];
      for (int j = 0; j <= cols; ++j) t[leave][j] /= piv;
      for (int i = 0; i <= m_; ++i) {
        if (i == leave) continue;
        double f = t[i][enter];
        if (f == 0.0) continue;
        for (int j = 0; j <= cols; ++j) t[i][j] -= f * t[leave][j];
      }
      basis[leave] = enter;
    }
    throw lp_error("LP iteration limit exceeded");
  }

 private:
  int n_, m_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> rhs_;
};

// ---------------------------------------------------------------------------
// Kantorovich value between two subdistributions over states of d's carrier:
// sup over nonexpansive f: X -> [0,1] of |E_xi f - E_xi' f|. Values of f
// outside the support union never matter (extend by inf of f(x) + d(x,.)).
inline double kantorovich(const Metric& d, const std::vector<std::pair<int, Rat>>& xi,
                          const std::vector<std::pair<int, Rat>>& xi2) {
  std::vector<int> states;
  for (const auto& [s, w] : xi) states.push_back(s);
  for (const auto& [s, w] : xi2) states.push_back(s);
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());
  int m = static_cast<int>(states.size());
  if (m == 0) return 0.0;

  std::vector<double> c(m, 0.0);
  auto idx = [&](int s) {
    return static_cast<int>(std::lower_bound(states.begin(), states.end(), s) - states.begin());
  };
  for (const auto& [s, w] : xi) c[idx(s)] += to_double(w);
  for (const auto& [s, w] : xi2) c[idx(s)] -= to_double(w);

  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  for (int i = 0; i < m; ++i) {
    std::vector<double> row(m, 0.0);
    row[i] = 1.0;
    rows.push_back(std::move(row));
    rhs.push_back(1.0);
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      std::vector<double> row(m, 0.0);
      row[i] = 1.0;
      row[j] = -1.0;
      rows.push_back(std::move(row));
      rhs.push_back(d.at(states[i], states[j]));
    }
  SimplexLP lp(m, std::move(rows), std::move(rhs));
  std::vector<double> neg(m);
  for (int i = 0; i < m; ++i) neg[i] = -c[i];
  return std::max(lp.maximize(c), lp.maximize(neg));
}

// Hausdorff value between finite state sets, with H(empty, empty) = 0 and
// H(empty, U) = 1 for nonempty U (matching sup emptyset = 0, inf emptyset = 1).
inline double hausdorff(const Metric& d, const std::vector<int>& U, const std::vector<int>& V) {
  if (U.empty() && V.empty()) return 0.0;
  if (U.empty() || V.empty()) return 1.0;
  double h = 0.0;
  for (int u : U) {
    double best = 2.0;
    for (int v : V) best = std::min(best, d.at(u, v));
    h = std::max(h, best);
  }
  for (int v : V) {
    double best = 2.0;
    for (int u : U) best = std::min(best, d.at(v, u));
    h = std::max(h, best);
  }
  return h;
}

namespace detail {

inline std::vector<std::pair<int, Rat>> dist_pairs(const BehaviorValue& v) {
  std::vector<std::pair<int, Rat>> out;
  for (std::size_t i = 0; i < v.items.size(); ++i)
    out.emplace_back(std::get<int>(v.items[i].leaf), v.weights[i]);
  return out;
}

inline std::vector<int> set_states(const BehaviorValue& v) {
  std::vector<int> out;
  for (const auto& e : v.items) out.push_back(std::get<int>(e.leaf));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pseudometric fiber: one lifted step, exact per modality leaf.
inline Metric lift_step_pmet(const SituationConfig& cfg, const Coalgebra& c, const Metric& d) {
  if (cfg.fiber != FiberKind::PMet1) throw validation_error("lift_step_pmet needs the pmet1 fiber");
  int n = c.carrier.size;
  Metric out = Metric::zero(n);
  for (int s = 0; s < n; ++s)
    for (int t = s + 1; t < n; ++t) {
      double val = 0.0;
      for (const ModalityDef& m : cfg.modalities) {
        const BehaviorValue& bs = select_component(m, c.next[s]);
        const BehaviorValue& bt = select_component(m, c.next[t]);
        double v;
        switch (m.leaf) {
          case LeafEval::ExpectedValue:
            v = kantorovich(d, detail::dist_pairs(bs), detail::dist_pairs(bt));
            break;
          case LeafEval::Sup:
          case LeafEval::Inf:
            v = hausdorff(d, detail::set_states(bs), detail::set_states(bt));
            break;
          case LeafEval::IdentityLeaf:
            v = d.at(std::get<int>(bs.leaf), std::get<int>(bt.leaf));
            break;
          case LeafEval::ConstTable:
            v = std::abs(m.const_table[bs.const_index] - m.const_table[bt.const_index]);
            break;
          default:
            throw refusal_error("modality '" + m.name +
                                "' has no exact pseudometric lift; use the grid oracle");
        }
        val = std::max(val, v);
      }
      out.set(s, t, std::min(std::max(val, 0.0), 1.0));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Eqrel fiber with two-valued truth: legitimate observations are exactly the
// indicators of unions of R-blocks; states split when any lifted observation
// tells them apart.
inline Partition lift_step_eqrel(const SituationConfig& cfg, const Coalgebra& c, const Partition& R) {
  if (cfg.fiber != FiberKind::EqRel || cfg.omega != TruthObject::Two)
    throw validation_error("lift_step_eqrel needs the eqrel fiber over two-valued truth");
  int n = c.carrier.size;
  int m = R.num_blocks;
  if (m > 20) throw refusal_error("lift_step_eqrel: more than 20 blocks (2^blocks observations)");

  ModalEvaluator ev(cfg, c);
  // Threshold modalities grouped per path: one refinement per (h, path).
  std::map<int, std::vector<int>> threshold_groups;
  std::vector<int> direct;
  for (std::size_t mi = 0; mi < cfg.modalities.size(); ++mi) {
    if (ev.is_threshold(static_cast<int>(mi)))
      threshold_groups[ev.path_id_of(static_cast<int>(mi))].push_back(static_cast<int>(mi));
    else
      direct.push_back(static_cast<int>(mi));
  }
  for (auto& [pid, mods] : threshold_groups)
    std::sort(mods.begin(), mods.end(), [&](int a, int b) {
      return cfg.modalities[a].threshold < cfg.modalities[b].threshold;
    });

  std::vector<int> ids(n, 0);
  auto refine_by = [&](auto&& key_of) {
    std::map<std::pair<int, std::decay_t<decltype(key_of(0))>>, int> rename;
    std::vector<int> next(n);
    for (int s = 0; s < n; ++s) {
      auto [it, fresh] = rename.emplace(std::make_pair(ids[s], key_of(s)), static_cast<int>(rename.size()));
      next[s] = it->second;
    }
    ids = std::move(next);
  };

  std::vector<double> k(n);
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    for (int s = 0; s < n; ++s) k[s] = (mask >> R.block[s]) & 1u ? 1.0 : 0.0;
    for (const auto& [pid, mods] : threshold_groups) {
      std::vector<Rat> mass = ev.masses(pid, k);
      // Class = how many of the group's thresholds the state's mass exceeds.
      refine_by([&](int s) {
        int cls = 0;
        for (int mi : mods)
          if (mass[s] > cfg.modalities[mi].threshold) ++cls;
        return cls;
      });
    }
    for (int mi : direct) {
      std::vector<double> o = ev.observe(mi, k);
      refine_by([&](int s) { return o[s]; });
    }
  }
  return canonical_partition(ids);
}

// ---------------------------------------------------------------------------
// Real-valued kernel at finite scale: legitimate observations are
// kernel-respecting bounded real maps; per-leaf signatures realize the exact
// split (block masses for Dist + expected value by linearity, hit-block sets
// for Pow + sup/inf via scaled indicators).
inline Partition lift_step_bu_kernel(const SituationConfig& cfg, const Coalgebra& c, const Partition& R) {
  if (cfg.fiber != FiberKind::EqRel || cfg.omega != TruthObject::Reals)
    throw validation_error("lift_step_bu_kernel needs the eqrel fiber over real truth");
  int n = c.carrier.size;
  std::vector<int> ids(n, 0);
  auto refine_by = [&](auto&& key_of) {
    std::map<std::pair<int, std::decay_t<decltype(key_of(0))>>, int> rename;
    std::vector<int> next(n);
    for (int s = 0; s < n; ++s) {
      auto [it, fresh] = rename.emplace(std::make_pair(ids[s], key_of(s)), static_cast<int>(rename.size()));
      next[s] = it->second;
    }
    ids = std::move(next);
  };

  for (const ModalityDef& m : cfg.modalities) {
    switch (m.leaf) {
      case LeafEval::ExpectedValue:
        refine_by([&](int s) {
          std::vector<Rat> sig(R.num_blocks, Rat(0));
          const BehaviorValue& v = select_component(m, c.next[s]);
          for (std::size_t i = 0; i < v.items.size(); ++i)
            sig[R.block[std::get<int>(v.items[i].leaf)]] += v.weights[i];
          return sig;
        });
        break;
      case LeafEval::Sup:
      case LeafEval::Inf:
        refine_by([&](int s) {
          std::vector<char> hit(R.num_blocks, 0);
          const BehaviorValue& v = select_component(m, c.next[s]);
          for (const auto& e : v.items) hit[R.block[std::get<int>(e.leaf)]] = 1;
          return hit;
        });
        break;
      case LeafEval::IdentityLeaf:
        refine_by([&](int s) { return R.block[std::get<int>(select_component(m, c.next[s]).leaf)]; });
        break;
      case LeafEval::ConstTable:
        refine_by([&](int s) { return m.const_table[select_component(m, c.next[s]).const_index]; });
        break;
      default:
        throw refusal_error("modality '" + m.name + "' has no exact real-kernel lift");
    }
  }
  return canonical_partition(ids);
}

// ---------------------------------------------------------------------------
// Brute-force oracle: max over grid-valued nonexpansive h of the lifted
// observation gap between two states, for one modality.
inline double grid_oracle_lift(const SituationConfig& cfg, const Coalgebra& c, const Metric& d, int mi,
                               int s, int t, int grid_denominator) {
  int n = c.carrier.size;
  if (n > 6) throw refusal_error("grid oracle: carrier larger than 6");
  ModalEvaluator ev(cfg, c);
  std::vector<double> h(n, 0.0);
  double best = 0.0;
  const double step = 1.0 / grid_denominator;
  auto rec = [&](auto&& self, int state) -> void {
    if (state == n) {
      std::vector<double> o = ev.observe(mi, h);
      best = std::max(best, std::abs(o[s] - o[t]));
      return;
    }
    for (int g = 0; g <= grid_denominator; ++g) {
      h[state] = g * step;
      bool ok = true;
      for (int prev = 0; prev < state; ++prev)
        if (std::abs(h[state] - h[prev]) > d.at(state, prev) + 1e-12) {
          ok = false;
          break;
        }
      if (ok) self(self, state + 1);
    }
  };
  rec(rec, 0);
  return best;
}

}  // namespace codense
