#pragma once

// Seeded random systems for the property suites: LMPs (labelled
// subdistributions), Markov chains, and Kripke frames. All draws go through
// one mt19937_64 so corpora are reproducible from a single seed.

#include <random>
#include <string>
#include <vector>

#include "codense/coalgebra.hpp"
#include "codense/situation.hpp"

namespace codense {

namespace fuzz {

inline int pick(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(rng() % static_cast<unsigned long long>(hi - lo + 1));
}

// Random subdistribution over states with total mass <= mass_cap, weights in
// units of 1/denominator.
inline BehaviorValue random_subdist(std::mt19937_64& rng, int n, int denominator, const Rat& mass_cap,
                                    int max_support = 3) {
  int budget = static_cast<int>(to_double(mass_cap) * denominator + 0.5);
  int count = pick(rng, 0, std::min(max_support, n));
  std::vector<BehaviorValue> support;
  std::vector<Rat> ws;
  for (int i = 0; i < count && budget > 0; ++i) {
    int w = pick(rng, 1, budget);
    budget -= w;
    support.push_back(BehaviorValue::state(pick(rng, 0, n - 1)));
    ws.push_back(rat(w, denominator));
  }
  return BehaviorValue::dist(std::move(support), std::move(ws));
}

inline std::vector<std::string> label_set(int count) {
  std::vector<std::string> labels;
  for (int i = 0; i < count; ++i) labels.push_back(std::string(1, static_cast<char>('a' + i)));
  return labels;
}

// LMP: functor (Dist Id)^A with rational weights.
inline Coalgebra random_lmp(std::mt19937_64& rng, int max_carrier, int max_labels, int denominator = 12) {
  int n = pick(rng, 2, max_carrier);
  int na = pick(rng, 1, max_labels);
  Coalgebra c;
  c.carrier = Carrier(n);
  c.functor = FunctorSpec::exponent(FunctorSpec::dist(FunctorSpec::id()), label_set(na));
  for (int s = 0; s < n; ++s) {
    std::vector<BehaviorValue> comps;
    for (int a = 0; a < na; ++a) comps.push_back(random_subdist(rng, n, denominator, Rat(1)));
    c.next.push_back(BehaviorValue::tuple(std::move(comps)));
  }
  c.validate();
  return c;
}

// Markov chain: functor Dist Id, per-state mass capped (substochastic chains
// keep the metric iteration contracting).
inline Coalgebra random_markov(std::mt19937_64& rng, int max_carrier, int denominator = 8,
                               Rat mass_cap = rat(3, 4)) {
  int n = pick(rng, 2, max_carrier);
  Coalgebra c;
  c.carrier = Carrier(n);
  c.functor = FunctorSpec::dist(FunctorSpec::id());
  for (int s = 0; s < n; ++s) c.next.push_back(random_subdist(rng, n, denominator, mass_cap, n));
  c.validate();
  return c;
}

// Kripke frame: functor Pow Id.
inline Coalgebra random_kripke(std::mt19937_64& rng, int max_carrier, bool allow_deadlock = true) {
  int n = pick(rng, 2, max_carrier);
  Coalgebra c;
  c.carrier = Carrier(n);
  c.functor = FunctorSpec::pow(FunctorSpec::id());
  for (int s = 0; s < n; ++s) {
    std::vector<BehaviorValue> succ;
    int count = pick(rng, allow_deadlock ? 0 : 1, std::min(3, n));
    for (int i = 0; i < count; ++i) succ.push_back(BehaviorValue::state(pick(rng, 0, n - 1)));
    c.next.push_back(BehaviorValue::set(std::move(succ)));
  }
  c.validate();
  return c;
}

// Coalgebra for the bu preset: one of Dist Id, Pow Id, (Dist Id)^A.
inline Coalgebra random_bounded_system(std::mt19937_64& rng, int max_carrier) {
  switch (pick(rng, 0, 2)) {
    case 0: return random_markov(rng, max_carrier, 8, Rat(1));
    case 1: return random_kripke(rng, max_carrier);
    default: return random_lmp(rng, max_carrier, 2, 8);
  }
}

// Fixed threshold grid {0, 1/d, ..., (d-1)/d} for cfkp situations that do not
// derive thresholds from the system.
inline std::vector<Rat> grid_thresholds(int denominator) {
  std::vector<Rat> out;
  for (int i = 0; i < denominator; ++i) out.push_back(rat(i, denominator));
  return out;
}

}  // namespace fuzz

}  // namespace codense
