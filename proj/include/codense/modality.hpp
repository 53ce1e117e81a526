#pragma once

// Observation modalities tau: B Omega -> Omega, given as a path of structural
// selectors ending in a leaf evaluator. Leaves over Dist: ExpectedValue and
// Threshold(r) (strict: 1 iff the mass at value 1 exceeds r). Leaves over Pow:
// Sup, Inf (with sup of the empty set 0 and inf of the empty set 1), Diamond,
// Box. Const leaves use a value table; CustomTable covers finite B Omega.

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "codense/functor.hpp"
#include "codense/rational.hpp"

namespace codense {

struct Selector {
  enum class Kind { First, Second, Label };
  Kind kind = Kind::First;
  std::string label;   // Label
  int label_idx = -1;  // resolved against the functor during validation
};

enum class LeafEval {
  ExpectedValue,
  Threshold,
  Sup,
  Inf,
  Diamond,
  Box,
  ConstTable,
  IdentityLeaf,
  CustomTable,
};

inline const char* leaf_eval_name(LeafEval e) {
  switch (e) {
    case LeafEval::ExpectedValue: return "expected_value";
    case LeafEval::Threshold: return "threshold";
    case LeafEval::Sup: return "sup";
    case LeafEval::Inf: return "inf";
    case LeafEval::Diamond: return "diamond";
    case LeafEval::Box: return "box";
    case LeafEval::ConstTable: return "const_table";
    case LeafEval::IdentityLeaf: return "identity";
    case LeafEval::CustomTable: return "custom_table";
  }
  return "?";
}

struct ModalityDef {
  std::string name;
  std::vector<Selector> path;
  LeafEval leaf = LeafEval::ExpectedValue;
  Rat threshold = 0;                                        // Threshold
  std::vector<double> const_table;                          // ConstTable, indexed like Const values
  std::vector<std::pair<BehaviorValue, double>> custom_table;  // CustomTable, canonical keys
};

// The sub-functor a modality's path points at.
inline FunctorRef path_target(const FunctorRef& f, const std::vector<Selector>& path) {
  FunctorRef cur = f;
  for (const auto& sel : path) {
    switch (sel.kind) {
      case Selector::Kind::First:
        if (cur->kind != FunctorSpec::Kind::Product) throw std::invalid_argument("selector 'first' needs a product");
        cur = cur->left;
        break;
      case Selector::Kind::Second:
        if (cur->kind != FunctorSpec::Kind::Product) throw std::invalid_argument("selector 'second' needs a product");
        cur = cur->right;
        break;
      case Selector::Kind::Label:
        if (cur->kind != FunctorSpec::Kind::Exponent)
          throw std::invalid_argument("label selector '" + sel.label + "' needs an exponent");
        if (cur->label_index(sel.label) < 0)
          throw std::invalid_argument("label '" + sel.label + "' is not in the functor's label set");
        cur = cur->left;
        break;
    }
  }
  return cur;
}

inline void validate_modality(ModalityDef& m, const FunctorRef& f) {
  FunctorRef cur = f;
  for (auto& sel : m.path) {
    switch (sel.kind) {
      case Selector::Kind::First:
      case Selector::Kind::Second:
        if (cur->kind != FunctorSpec::Kind::Product)
          throw std::invalid_argument("modality '" + m.name + "': projection selector needs a product");
        cur = sel.kind == Selector::Kind::First ? cur->left : cur->right;
        break;
      case Selector::Kind::Label: {
        if (cur->kind != FunctorSpec::Kind::Exponent)
          throw std::invalid_argument("modality '" + m.name + "': label selector needs an exponent");
        int idx = cur->label_index(sel.label);
        if (idx < 0)
          throw std::invalid_argument("modality '" + m.name + "': unknown label '" + sel.label + "'");
        sel.label_idx = idx;
        cur = cur->left;
        break;
      }
    }
  }
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("modality '" + m.name + "': " + what);
  };
  switch (m.leaf) {
    case LeafEval::ExpectedValue:
    case LeafEval::Threshold:
      require(cur->kind == FunctorSpec::Kind::Dist && cur->left->kind == FunctorSpec::Kind::Id,
              "leaf needs Dist(Id) at the end of the path");
      if (m.leaf == LeafEval::Threshold)
        require(m.threshold >= 0 && m.threshold <= 1, "threshold must lie in [0,1]");
      break;
    case LeafEval::Sup:
    case LeafEval::Inf:
    case LeafEval::Diamond:
    case LeafEval::Box:
      require(cur->kind == FunctorSpec::Kind::Pow && cur->left->kind == FunctorSpec::Kind::Id,
              "leaf needs Pow(Id) at the end of the path");
      break;
    case LeafEval::ConstTable:
      require(cur->kind == FunctorSpec::Kind::Const, "leaf needs Const at the end of the path");
      require(m.const_table.size() == cur->values.size(), "table must cover the whole constant set");
      break;
    case LeafEval::IdentityLeaf:
      require(cur->kind == FunctorSpec::Kind::Id, "leaf needs Id at the end of the path");
      break;
    case LeafEval::CustomTable:
      require(!m.custom_table.empty(), "custom table must be nonempty");
      break;
  }
}

inline const BehaviorValue& select_component(const ModalityDef& m, const BehaviorValue& b) {
  const BehaviorValue* cur = &b;
  for (const auto& sel : m.path) {
    switch (sel.kind) {
      case Selector::Kind::First: cur = &cur->items[0]; break;
      case Selector::Kind::Second: cur = &cur->items[1]; break;
      case Selector::Kind::Label: cur = &cur->items[sel.label_idx]; break;
    }
  }
  return *cur;
}

inline double leaf_value(const BehaviorValue& b) {
  if (b.kind != BehaviorValue::Kind::Id || !std::holds_alternative<double>(b.leaf))
    throw std::invalid_argument("expected an Omega value at an Id leaf");
  return std::get<double>(b.leaf);
}

// Exact mass a distribution puts on the Omega value 1.
inline Rat mass_at_one(const BehaviorValue& d) {
  Rat m = 0;
  for (std::size_t i = 0; i < d.items.size(); ++i)
    if (leaf_value(d.items[i]) == 1.0) m += d.weights[i];
  return m;
}

// Evaluates tau on a behavior over Omega (Id leaves carry Omega values).
inline double eval_modality(const ModalityDef& m, const BehaviorValue& b_omega) {
  const BehaviorValue& v = select_component(m, b_omega);
  switch (m.leaf) {
    case LeafEval::ExpectedValue: {
      if (v.kind != BehaviorValue::Kind::Dist) throw std::invalid_argument("expected_value: not a distribution");
      double acc = 0.0;
      for (std::size_t i = 0; i < v.items.size(); ++i) acc += leaf_value(v.items[i]) * to_double(v.weights[i]);
      return acc;
    }
    case LeafEval::Threshold: {
      if (v.kind != BehaviorValue::Kind::Dist) throw std::invalid_argument("threshold: not a distribution");
      return mass_at_one(v) > m.threshold ? 1.0 : 0.0;
    }
    case LeafEval::Sup: {
      if (v.kind != BehaviorValue::Kind::Set) throw std::invalid_argument("sup: not a set");
      if (v.items.empty()) return 0.0;  // sup of the empty set
      double best = leaf_value(v.items[0]);
      for (const auto& e : v.items) best = std::max(best, leaf_value(e));
      return best;
    }
    case LeafEval::Inf: {
      if (v.kind != BehaviorValue::Kind::Set) throw std::invalid_argument("inf: not a set");
      if (v.items.empty()) return 1.0;  // inf of the empty set
      double best = leaf_value(v.items[0]);
      for (const auto& e : v.items) best = std::min(best, leaf_value(e));
      return best;
    }
    case LeafEval::Diamond: {
      if (v.kind != BehaviorValue::Kind::Set) throw std::invalid_argument("diamond: not a set");
      for (const auto& e : v.items)
        if (leaf_value(e) == 1.0) return 1.0;
      return 0.0;
    }
    case LeafEval::Box: {
      if (v.kind != BehaviorValue::Kind::Set) throw std::invalid_argument("box: not a set");
      for (const auto& e : v.items)
        if (leaf_value(e) != 1.0) return 0.0;
      return 1.0;
    }
    case LeafEval::ConstTable: {
      if (v.kind != BehaviorValue::Kind::Const) throw std::invalid_argument("const_table: not a constant");
      return m.const_table.at(v.const_index);
    }
    case LeafEval::IdentityLeaf: return leaf_value(v);
    case LeafEval::CustomTable: {
      for (const auto& [key, val] : m.custom_table)
        if (behavior_equal(key, v)) return val;
      throw std::invalid_argument("custom_table: behavior not covered by the table");
    }
  }
  throw std::logic_error("unreachable");
}

inline ModalityDef make_modality(std::string name, std::vector<Selector> path, LeafEval leaf) {
  ModalityDef m;
  m.name = std::move(name);
  m.path = std::move(path);
  m.leaf = leaf;
  return m;
}

inline Selector sel_label(std::string a) { return Selector{Selector::Kind::Label, std::move(a), -1}; }
inline Selector sel_first() { return Selector{Selector::Kind::First, {}, -1}; }
inline Selector sel_second() { return Selector{Selector::Kind::Second, {}, -1}; }

}  // namespace codense
