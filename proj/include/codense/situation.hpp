#pragma once

// An expressivity situation: fiber kind, truth object, behavior functor,
// propositional connectives with their parameter grids, and the modality
// list. Three presets are shipped: kmm (pseudometric / unit interval), cfkp
// (equivalence relations / two-valued, threshold modalities), and bu
// (bisimulation uniformity at finite scale / real-valued).

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "codense/coalgebra.hpp"
#include "codense/fiber.hpp"
#include "codense/modality.hpp"
#include "codense/rational.hpp"

namespace codense {

enum class TruthObject { Two, UnitInterval, Reals };

inline const char* truth_object_name(TruthObject t) {
  switch (t) {
    case TruthObject::Two: return "two";
    case TruthObject::UnitInterval: return "unit";
    case TruthObject::Reals: return "real";
  }
  return "?";
}

enum class ConnKind { Top, Min, Neg, MinusQ, One, AddR, ScaleR, And };

struct ConnectiveDef {
  std::string name;  // text-syntax head: T, min, neg, minus, one, add, scale, and
  ConnKind kind = ConnKind::Top;
  int arity = 0;
  std::optional<Rat> param;  // minus/add/scale, drawn from the configured grid
  bool commutative = false;

  double apply(const double* args) const {
    switch (kind) {
      case ConnKind::Top: return 1.0;
      case ConnKind::One: return 1.0;
      case ConnKind::Min: return std::min(args[0], args[1]);
      case ConnKind::And: return std::min(args[0], args[1]);
      case ConnKind::Neg: return 1.0 - args[0];
      case ConnKind::MinusQ: return std::max(args[0] - to_double(*param), 0.0);
      case ConnKind::AddR: return to_double(*param) + args[0];
      case ConnKind::ScaleR: return to_double(*param) * args[0];
    }
    return 0.0;
  }
};

struct GenerationCaps {
  int vectors_per_level = 5000;
  int rounds_per_level = 50;
  // Real-valued truth only: constants form an infinite closure (scaling by 1/2
  // halves the granularity forever), so they get their own budget. Structure
  // vectors regenerate any clamp level from scaled copies.
  int constant_cap = 32;
};

struct SituationConfig {
  std::string preset;  // "kmm", "cfkp", "bu" or "" for hand-built
  FiberKind fiber = FiberKind::EqRel;
  TruthObject omega = TruthObject::Two;
  FunctorRef functor;
  std::vector<ConnectiveDef> connectives;
  std::vector<ModalityDef> modalities;
  int q_grid_denominator = 8;                 // grid for the truncated-subtraction parameter
  std::vector<Rat> r_grid;                    // grid for affine parameters
  Rat clamp_lo = -2, clamp_hi = 2;            // generated-vector range for real-valued truth
  GenerationCaps caps;

  int connective_index(const std::string& name, const std::optional<Rat>& param) const {
    for (std::size_t i = 0; i < connectives.size(); ++i)
      if (connectives[i].name == name && connectives[i].param == param) return static_cast<int>(i);
    return -1;
  }
  int modality_index(const std::string& name) const {
    for (std::size_t i = 0; i < modalities.size(); ++i)
      if (modalities[i].name == name) return static_cast<int>(i);
    return -1;
  }

  void validate() {
    if (!functor) throw std::invalid_argument("situation without a behavior functor");
    if (fiber == FiberKind::EqRel && omega == TruthObject::UnitInterval)
      throw std::invalid_argument("eqrel fiber needs a two-valued or real truth object");
    if (fiber == FiberKind::PMet1 && omega != TruthObject::UnitInterval)
      throw std::invalid_argument("pmet1 fiber needs the unit-interval truth object");
    if (clamp_lo >= clamp_hi) throw std::invalid_argument("empty clamp range");
    for (auto& m : modalities) validate_modality(m, functor);
    for (std::size_t i = 0; i < modalities.size(); ++i)
      for (std::size_t j = i + 1; j < modalities.size(); ++j)
        if (modalities[i].name == modalities[j].name)
          throw std::invalid_argument("duplicate modality name '" + modalities[i].name + "'");
  }
};

inline std::vector<Rat> default_r_grid() {
  return {rat(-2), rat(-1), rat(-1, 2), rat(0), rat(1, 2), rat(1), rat(2)};
}

inline std::vector<ConnectiveDef> kmm_connectives(int q_denominator) {
  std::vector<ConnectiveDef> cs;
  cs.push_back({"T", ConnKind::Top, 0, std::nullopt, false});
  cs.push_back({"neg", ConnKind::Neg, 1, std::nullopt, false});
  for (int i = 0; i <= q_denominator; ++i)
    cs.push_back({"minus", ConnKind::MinusQ, 1, rat(i, q_denominator), false});
  cs.push_back({"min", ConnKind::Min, 2, std::nullopt, true});
  return cs;
}

inline std::vector<ConnectiveDef> cfkp_connectives() {
  return {{"T", ConnKind::Top, 0, std::nullopt, false}, {"and", ConnKind::And, 2, std::nullopt, true}};
}

inline std::vector<ConnectiveDef> bu_connectives(const std::vector<Rat>& r_grid) {
  std::vector<ConnectiveDef> cs;
  cs.push_back({"one", ConnKind::One, 0, std::nullopt, false});
  for (const auto& r : r_grid) cs.push_back({"add", ConnKind::AddR, 1, r, false});
  for (const auto& r : r_grid) cs.push_back({"scale", ConnKind::ScaleR, 1, r, false});
  cs.push_back({"min", ConnKind::Min, 2, std::nullopt, true});
  return cs;
}

// Default modality choice for a functor with numeric truth values: one
// expected-value (or sup) observation per structural position.
inline std::vector<ModalityDef> derive_numeric_modalities(const FunctorRef& f) {
  std::vector<ModalityDef> out;
  auto walk = [&](auto&& self, const FunctorRef& cur, std::vector<Selector> path, std::string name) -> void {
    switch (cur->kind) {
      case FunctorSpec::Kind::Dist:
        if (cur->left->kind == FunctorSpec::Kind::Id)
          out.push_back(make_modality(name.empty() ? "E" : "E_" + name, path, LeafEval::ExpectedValue));
        return;
      case FunctorSpec::Kind::Pow:
        if (cur->left->kind == FunctorSpec::Kind::Id)
          out.push_back(make_modality(name.empty() ? "sup" : "sup_" + name, path, LeafEval::Sup));
        return;
      case FunctorSpec::Kind::Id:
        out.push_back(make_modality(name.empty() ? "id" : "id_" + name, path, LeafEval::IdentityLeaf));
        return;
      case FunctorSpec::Kind::Exponent:
        for (const auto& a : cur->labels) {
          auto p = path;
          p.push_back(sel_label(a));
          self(self, cur->left, std::move(p), name.empty() ? a : name + "." + a);
        }
        return;
      case FunctorSpec::Kind::Product: {
        auto pl = path;
        pl.push_back(sel_first());
        self(self, cur->left, std::move(pl), name.empty() ? "fst" : name + ".fst");
        auto pr = path;
        pr.push_back(sel_second());
        self(self, cur->right, std::move(pr), name.empty() ? "snd" : name + ".snd");
        return;
      }
      case FunctorSpec::Kind::Const: return;
    }
  };
  walk(walk, f, {}, "");
  return out;
}

inline SituationConfig kmm_config(FunctorRef functor, std::vector<ModalityDef> modalities = {},
                                  int q_denominator = 8) {
  SituationConfig cfg;
  cfg.preset = "kmm";
  cfg.fiber = FiberKind::PMet1;
  cfg.omega = TruthObject::UnitInterval;
  cfg.functor = std::move(functor);
  cfg.q_grid_denominator = q_denominator;
  cfg.connectives = kmm_connectives(q_denominator);
  cfg.modalities = modalities.empty() ? derive_numeric_modalities(cfg.functor) : std::move(modalities);
  cfg.validate();
  return cfg;
}

// Threshold modalities named "<label>:<r>", one per (label, threshold).
inline std::vector<ModalityDef> threshold_modalities(const FunctorRef& f, const std::vector<Rat>& thresholds) {
  if (f->kind != FunctorSpec::Kind::Exponent || f->left->kind != FunctorSpec::Kind::Dist ||
      f->left->left->kind != FunctorSpec::Kind::Id)
    throw std::invalid_argument("threshold modalities need the functor (Dist Id)^A");
  std::vector<ModalityDef> out;
  for (const auto& a : f->labels)
    for (const auto& r : thresholds) {
      ModalityDef m = make_modality(a + ":" + rat_to_string(r), {sel_label(a)}, LeafEval::Threshold);
      m.threshold = r;
      out.push_back(std::move(m));
    }
  return out;
}

inline SituationConfig cfkp_config(FunctorRef functor, const std::vector<Rat>& thresholds) {
  SituationConfig cfg;
  cfg.preset = "cfkp";
  cfg.fiber = FiberKind::EqRel;
  cfg.omega = TruthObject::Two;
  cfg.functor = functor;
  cfg.connectives = cfkp_connectives();
  cfg.modalities = threshold_modalities(functor, thresholds);
  cfg.validate();
  return cfg;
}

inline SituationConfig bu_config(FunctorRef functor, std::vector<ModalityDef> modalities = {},
                                 std::vector<Rat> r_grid = {}) {
  SituationConfig cfg;
  cfg.preset = "bu";
  cfg.fiber = FiberKind::EqRel;
  cfg.omega = TruthObject::Reals;
  cfg.functor = std::move(functor);
  cfg.r_grid = r_grid.empty() ? default_r_grid() : std::move(r_grid);
  cfg.connectives = bu_connectives(cfg.r_grid);
  cfg.modalities = modalities.empty() ? derive_numeric_modalities(cfg.functor) : std::move(modalities);
  // Mass-bounded leaves only (threshold and diamond/box are two-valued, not
  // real-valued observations).
  for (const auto& m : cfg.modalities)
    if (m.leaf == LeafEval::Threshold || m.leaf == LeafEval::Diamond || m.leaf == LeafEval::Box ||
        m.leaf == LeafEval::CustomTable)
      throw std::invalid_argument("bu preset rejects modality '" + m.name + "' (leaf not mass-bounded/real)");
  cfg.validate();
  return cfg;
}

}  // namespace codense
