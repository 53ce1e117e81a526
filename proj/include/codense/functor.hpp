#pragma once

// Behavior-functor grammar F ::= Id | Const C | Product F F | Exponent F A |
// Pow F | Dist F, behavior values shaped by it, and the functorial action on
// observations (map_behavior). Distribution weights are exact rationals; Id
// leaves hold a state index before mapping and an Omega value afterwards.

#include <algorithm>
#include <compare>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "codense/rational.hpp"

namespace codense {

struct FunctorSpec;
using FunctorRef = std::shared_ptr<const FunctorSpec>;

struct FunctorSpec {
  enum class Kind { Id, Const, Product, Exponent, Pow, Dist };
  Kind kind = Kind::Id;
  std::vector<std::string> values;  // Const: the finite value set
  std::vector<std::string> labels;  // Exponent: the label set A
  FunctorRef left;                  // Product left / inner of Exponent, Pow, Dist
  FunctorRef right;                 // Product right

  static FunctorRef id() { return std::make_shared<FunctorSpec>(FunctorSpec{Kind::Id, {}, {}, nullptr, nullptr}); }
  static FunctorRef constant(std::vector<std::string> vals) {
    if (vals.empty()) throw std::invalid_argument("Const needs a nonempty value set");
    return std::make_shared<FunctorSpec>(FunctorSpec{Kind::Const, std::move(vals), {}, nullptr, nullptr});
  }
  static FunctorRef product(FunctorRef l, FunctorRef r) {
    return std::make_shared<FunctorSpec>(FunctorSpec{Kind::Product, {}, {}, std::move(l), std::move(r)});
  }
  static FunctorRef exponent(FunctorRef inner, std::vector<std::string> labs) {
    if (labs.empty()) throw std::invalid_argument("Exponent needs a nonempty label set");
    return std::make_shared<FunctorSpec>(
        FunctorSpec{Kind::Exponent, {}, std::move(labs), std::move(inner), nullptr});
  }
  static FunctorRef pow(FunctorRef inner) {
    return std::make_shared<FunctorSpec>(FunctorSpec{Kind::Pow, {}, {}, std::move(inner), nullptr});
  }
  static FunctorRef dist(FunctorRef inner) {
    return std::make_shared<FunctorSpec>(FunctorSpec{Kind::Dist, {}, {}, std::move(inner), nullptr});
  }

  int label_index(const std::string& a) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == a) return static_cast<int>(i);
    return -1;
  }
  int value_index(const std::string& c) const {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] == c) return static_cast<int>(i);
    return -1;
  }
};

inline bool functor_equal(const FunctorRef& a, const FunctorRef& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->values != b->values || a->labels != b->labels) return false;
  if (a->kind == FunctorSpec::Kind::Product)
    return functor_equal(a->left, b->left) && functor_equal(a->right, b->right);
  if (a->left || b->left) return functor_equal(a->left, b->left);
  return true;
}

// Id-leaf payload: a state index (before mapping) or an Omega value (after).
using Leaf = std::variant<int, double>;

struct BehaviorValue {
  enum class Kind { Id, Const, Pair, Tuple, Set, Dist };
  Kind kind = Kind::Id;
  Leaf leaf = 0;                    // Id
  int const_index = 0;              // Const
  std::vector<BehaviorValue> items; // Pair (2) / Tuple (|A|) / Set / Dist support
  std::vector<Rat> weights;         // Dist, parallel to items

  static BehaviorValue state(int s) { return BehaviorValue{Kind::Id, s, 0, {}, {}}; }
  static BehaviorValue omega(double v) { return BehaviorValue{Kind::Id, v, 0, {}, {}}; }
  static BehaviorValue constant(int idx) { return BehaviorValue{Kind::Const, 0, idx, {}, {}}; }
  static BehaviorValue pair(BehaviorValue l, BehaviorValue r) {
    BehaviorValue b{Kind::Pair, 0, 0, {}, {}};
    b.items.push_back(std::move(l));
    b.items.push_back(std::move(r));
    return b;
  }
  static BehaviorValue tuple(std::vector<BehaviorValue> comps) {
    return BehaviorValue{Kind::Tuple, 0, 0, std::move(comps), {}};
  }
  static BehaviorValue set(std::vector<BehaviorValue> elems);
  static BehaviorValue dist(std::vector<BehaviorValue> support, std::vector<Rat> ws);
};

inline std::strong_ordering compare(const BehaviorValue& a, const BehaviorValue& b);

inline std::strong_ordering compare_leaf(const Leaf& a, const Leaf& b) {
  if (a.index() != b.index()) return a.index() <=> b.index();
  if (std::holds_alternative<int>(a)) return std::get<int>(a) <=> std::get<int>(b);
  double x = std::get<double>(a), y = std::get<double>(b);
  if (x < y) return std::strong_ordering::less;
  if (x > y) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

inline std::strong_ordering compare(const BehaviorValue& a, const BehaviorValue& b) {
  if (a.kind != b.kind) return a.kind <=> b.kind;
  switch (a.kind) {
    case BehaviorValue::Kind::Id: return compare_leaf(a.leaf, b.leaf);
    case BehaviorValue::Kind::Const: return a.const_index <=> b.const_index;
    default: break;
  }
  if (auto c = a.items.size() <=> b.items.size(); c != 0) return c;
  for (std::size_t i = 0; i < a.items.size(); ++i)
    if (auto c = compare(a.items[i], b.items[i]); c != 0) return c;
  if (a.kind == BehaviorValue::Kind::Dist) {
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
      if (a.weights[i] < b.weights[i]) return std::strong_ordering::less;
      if (a.weights[i] > b.weights[i]) return std::strong_ordering::greater;
    }
  }
  return std::strong_ordering::equal;
}

inline bool behavior_equal(const BehaviorValue& a, const BehaviorValue& b) { return compare(a, b) == 0; }

inline BehaviorValue BehaviorValue::set(std::vector<BehaviorValue> elems) {
  std::sort(elems.begin(), elems.end(), [](const auto& x, const auto& y) { return compare(x, y) < 0; });
  elems.erase(std::unique(elems.begin(), elems.end(),
                          [](const auto& x, const auto& y) { return compare(x, y) == 0; }),
              elems.end());
  return BehaviorValue{Kind::Set, 0, 0, std::move(elems), {}};
}

inline BehaviorValue BehaviorValue::dist(std::vector<BehaviorValue> support, std::vector<Rat> ws) {
  if (support.size() != ws.size()) throw std::invalid_argument("dist: support/weight size mismatch");
  std::vector<std::size_t> order(support.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return compare(support[i], support[j]) < 0; });
  BehaviorValue b{Kind::Dist, 0, 0, {}, {}};
  for (std::size_t i : order) {
    if (ws[i] == 0) continue;
    if (!b.items.empty() && compare(b.items.back(), support[i]) == 0)
      b.weights.back() += ws[i];
    else {
      b.items.push_back(std::move(support[i]));
      b.weights.push_back(ws[i]);
    }
  }
  return b;
}

inline Rat dist_mass(const BehaviorValue& d) {
  Rat m = 0;
  for (const auto& w : d.weights) m += w;
  return m;
}

// Shape check of a behavior value against a functor at carrier size n.
inline void validate_shape(const FunctorRef& f, const BehaviorValue& b, int n, const std::string& where) {
  auto fail = [&](const std::string& msg) { throw std::invalid_argument(where + ": " + msg); };
  switch (f->kind) {
    case FunctorSpec::Kind::Id:
      if (b.kind != BehaviorValue::Kind::Id) fail("expected a state");
      if (std::holds_alternative<int>(b.leaf)) {
        int s = std::get<int>(b.leaf);
        if (s < 0 || s >= n) fail("state index out of range");
      }
      return;
    case FunctorSpec::Kind::Const:
      if (b.kind != BehaviorValue::Kind::Const) fail("expected a constant");
      if (b.const_index < 0 || b.const_index >= static_cast<int>(f->values.size()))
        fail("constant index out of range");
      return;
    case FunctorSpec::Kind::Product:
      if (b.kind != BehaviorValue::Kind::Pair || b.items.size() != 2) fail("expected a pair");
      validate_shape(f->left, b.items[0], n, where + ".first");
      validate_shape(f->right, b.items[1], n, where + ".second");
      return;
    case FunctorSpec::Kind::Exponent:
      if (b.kind != BehaviorValue::Kind::Tuple) fail("expected a labeled tuple");
      if (b.items.size() != f->labels.size()) fail("tuple arity does not match label set");
      for (std::size_t i = 0; i < b.items.size(); ++i)
        validate_shape(f->left, b.items[i], n, where + "." + f->labels[i]);
      return;
    case FunctorSpec::Kind::Pow:
      if (b.kind != BehaviorValue::Kind::Set) fail("expected a finite set");
      for (std::size_t i = 0; i < b.items.size(); ++i)
        validate_shape(f->left, b.items[i], n, where + "[" + std::to_string(i) + "]");
      return;
    case FunctorSpec::Kind::Dist: {
      if (b.kind != BehaviorValue::Kind::Dist) fail("expected a distribution");
      Rat mass = 0;
      for (std::size_t i = 0; i < b.items.size(); ++i) {
        validate_shape(f->left, b.items[i], n, where + "[" + std::to_string(i) + "]");
        if (b.weights[i] < 0) fail("negative weight");
        mass += b.weights[i];
      }
      if (mass > 1) fail("distribution weights sum to more than 1");
      return;
    }
  }
}

// Functorial action B k: relabels Id leaves through k, deduplicating set
// images and merging distribution weights on collisions.
inline BehaviorValue map_behavior(const FunctorRef& f, const BehaviorValue& b, std::span<const Leaf> k) {
  switch (f->kind) {
    case FunctorSpec::Kind::Id: {
      if (b.kind != BehaviorValue::Kind::Id || !std::holds_alternative<int>(b.leaf))
        throw std::invalid_argument("map_behavior: value is not over states");
      int s = std::get<int>(b.leaf);
      if (s < 0 || s >= static_cast<int>(k.size()))
        throw std::invalid_argument("map_behavior: state out of range of the map");
      BehaviorValue out = b;
      out.leaf = k[s];
      return out;
    }
    case FunctorSpec::Kind::Const: return b;
    case FunctorSpec::Kind::Product:
      return BehaviorValue::pair(map_behavior(f->left, b.items[0], k), map_behavior(f->right, b.items[1], k));
    case FunctorSpec::Kind::Exponent: {
      std::vector<BehaviorValue> comps;
      comps.reserve(b.items.size());
      for (const auto& item : b.items) comps.push_back(map_behavior(f->left, item, k));
      return BehaviorValue::tuple(std::move(comps));
    }
    case FunctorSpec::Kind::Pow: {
      std::vector<BehaviorValue> elems;
      elems.reserve(b.items.size());
      for (const auto& item : b.items) elems.push_back(map_behavior(f->left, item, k));
      return BehaviorValue::set(std::move(elems));
    }
    case FunctorSpec::Kind::Dist: {
      std::vector<BehaviorValue> support;
      support.reserve(b.items.size());
      for (const auto& item : b.items) support.push_back(map_behavior(f->left, item, k));
      return BehaviorValue::dist(std::move(support), b.weights);
    }
  }
  throw std::logic_error("unreachable");
}

inline std::vector<Leaf> omega_map(const std::vector<double>& v) {
  std::vector<Leaf> k(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) k[i] = v[i];
  return k;
}

inline std::vector<Leaf> identity_map(int n) {
  std::vector<Leaf> k(n);
  for (int i = 0; i < n; ++i) k[i] = i;
  return k;
}

}  // namespace codense
