#pragma once

// End-to-end pipelines for the shipped situations: probabilistic bisimilarity
// of finite LMPs by exact-rational partition refinement, threshold derivation
// for the two-valued logic, and the bisimulation/logical uniformity kernels
// at finite scale (where a uniformity is determined by its kernel relation).

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "codense/codensity.hpp"
#include "codense/fiber.hpp"
#include "codense/fixpoint.hpp"
#include "codense/logic.hpp"

namespace codense {

inline bool is_lmp(const Coalgebra& c) {
  const auto& f = c.functor;
  return f->kind == FunctorSpec::Kind::Exponent && f->left->kind == FunctorSpec::Kind::Dist &&
         f->left->left->kind == FunctorSpec::Kind::Id;
}

// Per-label, per-state support lists of an LMP.
inline std::vector<std::vector<std::vector<std::pair<int, Rat>>>> lmp_rows(const Coalgebra& c) {
  int n = c.carrier.size;
  int na = static_cast<int>(c.functor->labels.size());
  std::vector<std::vector<std::vector<std::pair<int, Rat>>>> rows(na);
  for (int a = 0; a < na; ++a) {
    rows[a].resize(n);
    for (int s = 0; s < n; ++s) {
      const BehaviorValue& d = c.next[s].items[a];
      for (std::size_t i = 0; i < d.items.size(); ++i)
        rows[a][s].emplace_back(std::get<int>(d.items[i].leaf), d.weights[i]);
    }
  }
  return rows;
}

// Probabilistic bisimilarity: split blocks by exact block-mass signatures
// until stable. Equality on blocks extends to block unions by additivity.
inline Partition prob_bisim(const Coalgebra& c) {
  if (!is_lmp(c)) throw validation_error("prob_bisim needs an LMP, functor (Dist Id)^A");
  int n = c.carrier.size;
  auto rows = lmp_rows(c);
  Partition cur = canonical_partition(std::vector<int>(n, 0));
  for (;;) {
    std::vector<std::vector<Rat>> sig(n);
    for (int s = 0; s < n; ++s) {
      for (const auto& row : rows) {
        std::vector<Rat> mass(cur.num_blocks, Rat(0));
        for (const auto& [x, w] : row[s]) mass[cur.block[x]] += w;
        sig[s].insert(sig[s].end(), mass.begin(), mass.end());
      }
    }
    std::vector<std::pair<int, std::vector<Rat>>> keyed(n);
    for (int s = 0; s < n; ++s) keyed[s] = {cur.block[s], sig[s]};
    Partition next = partition_by_key(keyed);
    if (next == cur) return cur;
    cur = next;
  }
}

// One signature-refinement round (the oracle side of the eqrel lift check).
inline Partition prob_bisim_step(const Coalgebra& c, const Partition& R) {
  if (!is_lmp(c)) throw validation_error("prob_bisim_step needs an LMP");
  int n = c.carrier.size;
  auto rows = lmp_rows(c);
  std::vector<std::vector<Rat>> sig(n);
  for (int s = 0; s < n; ++s)
    for (const auto& row : rows) {
      std::vector<Rat> mass(R.num_blocks, Rat(0));
      for (const auto& [x, w] : row[s]) mass[R.block[x]] += w;
      sig[s].insert(sig[s].end(), mass.begin(), mass.end());
    }
  return partition_by_key(sig);
}

// A finite set of strict thresholds that distinguishes exactly what all of
// Q cap [0,1] distinguishes on this LMP: all achievable block-union masses,
// each value standing for the gap up to the next one (the maximum is dropped).
inline std::vector<Rat> cfkp_thresholds(const Coalgebra& c) {
  if (!is_lmp(c)) throw validation_error("cfkp_thresholds needs an LMP");
  Partition p = prob_bisim(c);
  if (p.num_blocks > 20) throw refusal_error("cfkp_thresholds: more than 20 blocks");
  auto rows = lmp_rows(c);
  std::set<Rat> achievable;
  achievable.insert(Rat(0));
  int n = c.carrier.size;
  for (const auto& row : rows)
    for (int s = 0; s < n; ++s) {
      std::vector<Rat> mass(p.num_blocks, Rat(0));
      for (const auto& [x, w] : row[s]) mass[p.block[x]] += w;
      for (unsigned mask = 0; mask < (1u << p.num_blocks); ++mask) {
        Rat total = 0;
        for (int b = 0; b < p.num_blocks; ++b)
          if (mask & (1u << b)) total += mass[b];
        achievable.insert(total);
      }
    }
  std::vector<Rat> out(achievable.begin(), achievable.end());
  if (!out.empty()) out.pop_back();  // nothing lies strictly above the largest mass
  return out;
}

// Bisimulation uniformity kernel: Kleene iteration of the real-kernel lift.
inline Partition uniformity_bisim_kernel(const SituationConfig& cfg, const Coalgebra& c) {
  if (cfg.omega != TruthObject::Reals)
    throw validation_error("uniformity kernels live over the real truth object");
  auto [nu, report] = kleene_gfp(cfg, c);
  return std::get<Partition>(nu);
}

// Logical uniformity kernel: joint kernel of all generated real-valued
// semantics vectors up to depth n.
inline Partition uniformity_logical_kernel(const SituationConfig& cfg, const Coalgebra& c, int n,
                                           std::optional<GenerationCaps> caps = {}) {
  if (cfg.omega != TruthObject::Reals)
    throw validation_error("uniformity kernels live over the real truth object");
  auto lp = logical_predicate(cfg, c, n, caps);
  return std::get<Partition>(lp.element);
}

}  // namespace codense
