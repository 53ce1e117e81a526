#pragma once

// Sampling check that a modality turns uniformly-close observations into
// uniformly-close observations of behaviors. Built-in leaves are nonexpansive
// by a one-line argument each (|E k - E k'| <= mass * ||k-k'||, |sup k - sup k'|
// <= ||k-k'|| on a common set, identity/projection/constant trivially); the
// sampler still exercises them. Custom tables are checked by sampling only.

#include <optional>
#include <random>
#include <vector>

#include "codense/functor.hpp"
#include "codense/modality.hpp"
#include "codense/rational.hpp"

namespace codense {

struct NonexpansiveCheck {
  enum class Status { VerifiedAnalytically, Pass, Fail, NotApplicable };
  struct Witness {
    std::vector<double> k, k2;
    BehaviorValue behavior;
    double k_distance = 0;
    double violation = 0;  // |tau(Bk b) - tau(Bk' b)|
  };
  Status status = Status::Pass;
  bool sampled_ok = true;
  std::optional<Witness> witness;
};

namespace detail {

inline BehaviorValue sample_behavior(const FunctorRef& f, int n, std::mt19937_64& rng) {
  switch (f->kind) {
    case FunctorSpec::Kind::Id: return BehaviorValue::state(static_cast<int>(rng() % n));
    case FunctorSpec::Kind::Const:
      return BehaviorValue::constant(static_cast<int>(rng() % f->values.size()));
    case FunctorSpec::Kind::Product:
      return BehaviorValue::pair(sample_behavior(f->left, n, rng), sample_behavior(f->right, n, rng));
    case FunctorSpec::Kind::Exponent: {
      std::vector<BehaviorValue> comps;
      for (std::size_t i = 0; i < f->labels.size(); ++i) comps.push_back(sample_behavior(f->left, n, rng));
      return BehaviorValue::tuple(std::move(comps));
    }
    case FunctorSpec::Kind::Pow: {
      std::vector<BehaviorValue> elems;
      int count = static_cast<int>(rng() % (n + 1));
      for (int i = 0; i < count; ++i) elems.push_back(sample_behavior(f->left, n, rng));
      return BehaviorValue::set(std::move(elems));
    }
    case FunctorSpec::Kind::Dist: {
      std::vector<BehaviorValue> support;
      std::vector<Rat> ws;
      int count = 1 + static_cast<int>(rng() % n);
      int budget = 8;
      for (int i = 0; i < count && budget > 0; ++i) {
        int w = 1 + static_cast<int>(rng() % budget);
        budget -= w;
        support.push_back(sample_behavior(f->left, n, rng));
        ws.push_back(rat(w, 8));
      }
      return BehaviorValue::dist(std::move(support), std::move(ws));
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace detail

inline NonexpansiveCheck check_nonexpansive_modality(const ModalityDef& m, const FunctorRef& functor,
                                                     int grid_denominator, int samples,
                                                     unsigned long long seed = 12345) {
  NonexpansiveCheck out;
  switch (m.leaf) {
    case LeafEval::Threshold:
    case LeafEval::Diamond:
    case LeafEval::Box:
      out.status = NonexpansiveCheck::Status::NotApplicable;
      return out;
    case LeafEval::CustomTable: out.status = NonexpansiveCheck::Status::Pass; break;
    default: out.status = NonexpansiveCheck::Status::VerifiedAnalytically; break;
  }

  std::mt19937_64 rng(seed);
  const int n = 3;
  const double step = 1.0 / grid_denominator;
  for (int trial = 0; trial < samples; ++trial) {
    BehaviorValue b = detail::sample_behavior(functor, n, rng);
    std::vector<double> k(n), k2(n);
    for (int s = 0; s < n; ++s) {
      int g = static_cast<int>(rng() % (grid_denominator + 1));
      k[s] = g * step;
      int delta = static_cast<int>(rng() % 3) - 1;  // one grid step at most
      int g2 = std::min(std::max(g + delta, 0), grid_denominator);
      k2[s] = g2 * step;
    }
    double kdist = 0;
    for (int s = 0; s < n; ++s) kdist = std::max(kdist, std::abs(k[s] - k2[s]));
    double v1, v2;
    try {
      v1 = eval_modality(m, map_behavior(functor, b, omega_map(k)));
      v2 = eval_modality(m, map_behavior(functor, b, omega_map(k2)));
    } catch (const std::invalid_argument&) {
      continue;  // table does not cover this sample
    }
    if (std::abs(v1 - v2) > kdist + 1e-12) {
      out.sampled_ok = false;
      if (out.status != NonexpansiveCheck::Status::VerifiedAnalytically)
        out.status = NonexpansiveCheck::Status::Fail;
      out.witness = NonexpansiveCheck::Witness{k, k2, b, kdist, std::abs(v1 - v2)};
      return out;
    }
  }
  return out;
}

}  // namespace codense
