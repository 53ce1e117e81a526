#pragma once

// System/situation file format (one JSON document carries both, so results
// are reproducible from a single artifact) and JSON rendering of results.
// Loading validates everything and reports the JSON path of the offending
// field.

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "codense/coalgebra.hpp"
#include "codense/errors.hpp"
#include "codense/expressivity.hpp"
#include "codense/fiber.hpp"
#include "codense/fixpoint.hpp"
#include "codense/instances.hpp"
#include "codense/situation.hpp"

namespace codense {

using Json = nlohmann::json;

struct SystemFile {
  Coalgebra coalgebra;
  SituationConfig situation;
  long long seed = 0;
  bool auto_thresholds = false;  // cfkp: thresholds derived from the system
};

namespace detail {

[[noreturn]] inline void fail_at(const std::string& path, const std::string& msg) {
  throw validation_error(path + ": " + msg);
}

inline const Json& need(const Json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) fail_at(path, std::string("missing field '") + key + "'");
  return j.at(key);
}

inline std::string need_string(const Json& j, const char* key, const std::string& path) {
  const Json& v = need(j, key, path);
  if (!v.is_string()) fail_at(path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline Rat rat_field(const Json& j, const std::string& path) {
  if (j.is_number_integer()) return Rat(j.get<long long>());
  if (j.is_string()) {
    try {
      return parse_rat(j.get<std::string>());
    } catch (const std::exception& e) {
      fail_at(path, e.what());
    }
  }
  fail_at(path, "expected a rational as \"p/q\" or an integer");
}

inline FunctorRef parse_functor(const Json& j, const std::string& path) {
  if (!j.is_object()) fail_at(path, "expected a functor object");
  std::string kind = need_string(j, "kind", path);
  if (kind == "id") return FunctorSpec::id();
  if (kind == "const") {
    const Json& vals = need(j, "values", path);
    if (!vals.is_array() || vals.empty()) fail_at(path + ".values", "expected a nonempty array");
    std::vector<std::string> values;
    for (const auto& v : vals) values.push_back(v.get<std::string>());
    return FunctorSpec::constant(std::move(values));
  }
  if (kind == "product")
    return FunctorSpec::product(parse_functor(need(j, "first", path), path + ".first"),
                                parse_functor(need(j, "second", path), path + ".second"));
  if (kind == "exponent") {
    const Json& labs = need(j, "labels", path);
    if (!labs.is_array() || labs.empty()) fail_at(path + ".labels", "expected a nonempty array");
    std::vector<std::string> labels;
    for (const auto& l : labs) labels.push_back(l.get<std::string>());
    return FunctorSpec::exponent(parse_functor(need(j, "inner", path), path + ".inner"), std::move(labels));
  }
  if (kind == "pow") return FunctorSpec::pow(parse_functor(need(j, "inner", path), path + ".inner"));
  if (kind == "dist") return FunctorSpec::dist(parse_functor(need(j, "inner", path), path + ".inner"));
  fail_at(path + ".kind", "unknown functor kind '" + kind + "'");
}

inline Json functor_to_json(const FunctorRef& f) {
  Json j;
  switch (f->kind) {
    case FunctorSpec::Kind::Id: j["kind"] = "id"; break;
    case FunctorSpec::Kind::Const:
      j["kind"] = "const";
      j["values"] = f->values;
      break;
    case FunctorSpec::Kind::Product:
      j["kind"] = "product";
      j["first"] = functor_to_json(f->left);
      j["second"] = functor_to_json(f->right);
      break;
    case FunctorSpec::Kind::Exponent:
      j["kind"] = "exponent";
      j["labels"] = f->labels;
      j["inner"] = functor_to_json(f->left);
      break;
    case FunctorSpec::Kind::Pow:
      j["kind"] = "pow";
      j["inner"] = functor_to_json(f->left);
      break;
    case FunctorSpec::Kind::Dist:
      j["kind"] = "dist";
      j["inner"] = functor_to_json(f->left);
      break;
  }
  return j;
}

inline BehaviorValue parse_behavior(const Json& j, const FunctorRef& f, const Carrier& carrier,
                                    const std::string& path) {
  switch (f->kind) {
    case FunctorSpec::Kind::Id: {
      std::string name;
      if (j.is_string())
        name = j.get<std::string>();
      else if (j.is_object() && j.contains("state"))
        name = need(j, "state", path).get<std::string>();
      else
        fail_at(path, "expected a state name");
      int s = carrier.index_of(name);
      if (s < 0) fail_at(path, "unknown state '" + name + "'");
      return BehaviorValue::state(s);
    }
    case FunctorSpec::Kind::Const: {
      std::string v;
      if (j.is_string())
        v = j.get<std::string>();
      else if (j.is_object() && j.contains("value"))
        v = need(j, "value", path).get<std::string>();
      else
        fail_at(path, "expected a constant");
      int idx = f->value_index(v);
      if (idx < 0) fail_at(path, "constant '" + v + "' is not in the value set");
      return BehaviorValue::constant(idx);
    }
    case FunctorSpec::Kind::Product: {
      if (!j.is_object()) fail_at(path, "expected {first, second}");
      return BehaviorValue::pair(parse_behavior(need(j, "first", path), f->left, carrier, path + ".first"),
                                 parse_behavior(need(j, "second", path), f->right, carrier, path + ".second"));
    }
    case FunctorSpec::Kind::Exponent: {
      const Json* items = &j;
      if (j.is_object() && j.contains("items")) items = &j.at("items");
      if (!items->is_object()) fail_at(path, "expected an object of labeled components");
      std::vector<BehaviorValue> comps;
      for (const auto& a : f->labels) {
        if (!items->contains(a)) fail_at(path, "missing component for label '" + a + "'");
        comps.push_back(parse_behavior(items->at(a), f->left, carrier, path + "." + a));
      }
      return BehaviorValue::tuple(std::move(comps));
    }
    case FunctorSpec::Kind::Pow: {
      const Json* items = &j;
      if (j.is_object() && j.contains("items")) items = &j.at("items");
      if (!items->is_array()) fail_at(path, "expected an array of elements");
      std::vector<BehaviorValue> elems;
      for (std::size_t i = 0; i < items->size(); ++i)
        elems.push_back(parse_behavior(items->at(i), f->left, carrier, path + "[" + std::to_string(i) + "]"));
      return BehaviorValue::set(std::move(elems));
    }
    case FunctorSpec::Kind::Dist: {
      std::vector<BehaviorValue> support;
      std::vector<Rat> ws;
      const Json* sup = &j;
      if (j.is_object() && j.contains("support")) sup = &j.at("support");
      if (sup->is_object() && f->left->kind == FunctorSpec::Kind::Id) {
        // shorthand: {"state name": "weight", ...}
        for (auto it = sup->begin(); it != sup->end(); ++it) {
          int s = carrier.index_of(it.key());
          if (s < 0) fail_at(path, "unknown state '" + it.key() + "'");
          support.push_back(BehaviorValue::state(s));
          ws.push_back(rat_field(it.value(), path + "." + it.key()));
        }
      } else if (sup->is_array()) {
        for (std::size_t i = 0; i < sup->size(); ++i) {
          const Json& entry = sup->at(i);
          std::string p = path + "[" + std::to_string(i) + "]";
          support.push_back(parse_behavior(need(entry, "value", p), f->left, carrier, p + ".value"));
          ws.push_back(rat_field(need(entry, "weight", p), p + ".weight"));
        }
      } else {
        fail_at(path, "expected a distribution");
      }
      for (std::size_t i = 0; i < ws.size(); ++i)
        if (ws[i] < 0) fail_at(path, "negative weight");
      return BehaviorValue::dist(std::move(support), std::move(ws));
    }
  }
  fail_at(path, "unreachable");
}

inline Json behavior_to_json(const BehaviorValue& b, const FunctorRef& f, const Carrier& carrier) {
  switch (f->kind) {
    case FunctorSpec::Kind::Id: return carrier.name(std::get<int>(b.leaf));
    case FunctorSpec::Kind::Const: return f->values[b.const_index];
    case FunctorSpec::Kind::Product: {
      Json j;
      j["first"] = behavior_to_json(b.items[0], f->left, carrier);
      j["second"] = behavior_to_json(b.items[1], f->right, carrier);
      return j;
    }
    case FunctorSpec::Kind::Exponent: {
      Json j = Json::object();
      for (std::size_t i = 0; i < f->labels.size(); ++i)
        j[f->labels[i]] = behavior_to_json(b.items[i], f->left, carrier);
      return j;
    }
    case FunctorSpec::Kind::Pow: {
      Json j = Json::array();
      for (const auto& e : b.items) j.push_back(behavior_to_json(e, f->left, carrier));
      return j;
    }
    case FunctorSpec::Kind::Dist: {
      if (f->left->kind == FunctorSpec::Kind::Id) {
        Json j = Json::object();
        for (std::size_t i = 0; i < b.items.size(); ++i)
          j[carrier.name(std::get<int>(b.items[i].leaf))] = rat_to_string(b.weights[i]);
        return j;
      }
      Json j = Json::array();
      for (std::size_t i = 0; i < b.items.size(); ++i) {
        Json entry;
        entry["value"] = behavior_to_json(b.items[i], f->left, carrier);
        entry["weight"] = rat_to_string(b.weights[i]);
        j.push_back(entry);
      }
      return j;
    }
  }
  return {};
}

inline std::vector<Selector> parse_path(const Json& j, const std::string& path) {
  std::vector<Selector> out;
  if (!j.is_array()) fail_at(path, "expected an array of selectors");
  for (const auto& step : j) {
    if (step.is_string()) {
      std::string s = step.get<std::string>();
      if (s == "first")
        out.push_back(sel_first());
      else if (s == "second")
        out.push_back(sel_second());
      else
        out.push_back(sel_label(s));
    } else if (step.is_object() && step.contains("label")) {
      out.push_back(sel_label(step.at("label").get<std::string>()));
    } else {
      fail_at(path, "selector must be \"first\", \"second\" or a label name");
    }
  }
  return out;
}

inline ModalityDef parse_modality(const Json& j, const FunctorRef& f, const std::string& path) {
  ModalityDef m;
  m.name = need_string(j, "name", path);
  if (j.contains("path")) m.path = parse_path(j.at("path"), path + ".path");
  std::string leaf = need_string(j, "leaf", path);
  if (leaf == "expected_value")
    m.leaf = LeafEval::ExpectedValue;
  else if (leaf == "threshold") {
    m.leaf = LeafEval::Threshold;
    m.threshold = rat_field(need(j, "r", path), path + ".r");
  } else if (leaf == "sup")
    m.leaf = LeafEval::Sup;
  else if (leaf == "inf")
    m.leaf = LeafEval::Inf;
  else if (leaf == "diamond")
    m.leaf = LeafEval::Diamond;
  else if (leaf == "box")
    m.leaf = LeafEval::Box;
  else if (leaf == "identity")
    m.leaf = LeafEval::IdentityLeaf;
  else if (leaf == "const_table") {
    m.leaf = LeafEval::ConstTable;
    FunctorRef target = path_target(f, m.path);
    if (target->kind != FunctorSpec::Kind::Const) fail_at(path, "const_table path must end at a constant set");
    const Json& table = need(j, "table", path);
    for (const auto& v : target->values) {
      if (!table.contains(v)) fail_at(path + ".table", "missing entry for '" + v + "'");
      m.const_table.push_back(table.at(v).get<double>());
    }
  } else
    fail_at(path + ".leaf", "unknown leaf '" + leaf + "'");
  return m;
}

inline Json modality_to_json(const ModalityDef& m) {
  Json j;
  j["name"] = m.name;
  Json p = Json::array();
  for (const auto& sel : m.path) {
    switch (sel.kind) {
      case Selector::Kind::First: p.push_back("first"); break;
      case Selector::Kind::Second: p.push_back("second"); break;
      case Selector::Kind::Label: p.push_back(sel.label); break;
    }
  }
  j["path"] = p;
  j["leaf"] = leaf_eval_name(m.leaf);
  if (m.leaf == LeafEval::Threshold) j["r"] = rat_to_string(m.threshold);
  return j;
}

}  // namespace detail

inline SystemFile load_system_json(const Json& root) {
  using detail::fail_at;
  using detail::need;
  SystemFile out;
  if (!root.is_object()) fail_at("$", "expected a JSON object");

  const Json& states = need(root, "states", "$");
  if (!states.is_array() || states.empty()) fail_at("$.states", "expected a nonempty array of state names");
  std::vector<std::string> names;
  for (const auto& s : states) names.push_back(s.get<std::string>());
  try {
    out.coalgebra.carrier = Carrier(names);
  } catch (const std::exception& e) {
    fail_at("$.states", e.what());
  }

  out.coalgebra.functor = detail::parse_functor(need(root, "functor", "$"), "$.functor");

  const Json& next = need(root, "next", "$");
  if (!next.is_object()) fail_at("$.next", "expected an object keyed by state names");
  for (const auto& name : names) {
    if (!next.contains(name)) fail_at("$.next", "missing behavior for state '" + name + "'");
    out.coalgebra.next.push_back(detail::parse_behavior(next.at(name), out.coalgebra.functor,
                                                        out.coalgebra.carrier, "$.next." + name));
  }
  try {
    out.coalgebra.validate();
  } catch (const std::exception& e) {
    throw validation_error(std::string("$.") + e.what());
  }

  const Json& sit = need(root, "situation", "$");
  std::string preset = sit.value("preset", "");
  SituationConfig& cfg = out.situation;
  try {
    if (preset == "kmm") {
      cfg = kmm_config(out.coalgebra.functor, {}, sit.value("q_grid_denominator", 8));
    } else if (preset == "cfkp") {
      out.auto_thresholds = true;
      cfg = cfkp_config(out.coalgebra.functor, {rat(1, 2)});  // placeholder set
    } else if (preset == "bu") {
      std::vector<Rat> grid;
      if (sit.contains("r_grid"))
        for (std::size_t i = 0; i < sit.at("r_grid").size(); ++i)
          grid.push_back(detail::rat_field(sit.at("r_grid").at(i), "$.situation.r_grid"));
      cfg = bu_config(out.coalgebra.functor, {}, std::move(grid));
    } else if (preset.empty()) {
      std::string fiber = detail::need_string(sit, "fiber", "$.situation");
      if (fiber == "eqrel")
        cfg.fiber = FiberKind::EqRel;
      else if (fiber == "pmet1")
        cfg.fiber = FiberKind::PMet1;
      else if (fiber == "boolpred")
        cfg.fiber = FiberKind::BoolPred;
      else
        fail_at("$.situation.fiber", "unknown fiber '" + fiber + "'");
      std::string omega = detail::need_string(sit, "omega", "$.situation");
      if (omega == "two")
        cfg.omega = TruthObject::Two;
      else if (omega == "unit")
        cfg.omega = TruthObject::UnitInterval;
      else if (omega == "real")
        cfg.omega = TruthObject::Reals;
      else
        fail_at("$.situation.omega", "unknown truth object '" + omega + "'");
      cfg.functor = out.coalgebra.functor;
      cfg.q_grid_denominator = sit.value("q_grid_denominator", 8);
      if (sit.contains("r_grid"))
        for (std::size_t i = 0; i < sit.at("r_grid").size(); ++i)
          cfg.r_grid.push_back(detail::rat_field(sit.at("r_grid").at(i), "$.situation.r_grid"));
      else
        cfg.r_grid = default_r_grid();
      // connectives: named sets or the matching preset family
      std::string conns = sit.value("connectives", "auto");
      if (conns == "kmm" || (conns == "auto" && cfg.omega == TruthObject::UnitInterval))
        cfg.connectives = kmm_connectives(cfg.q_grid_denominator);
      else if (conns == "cfkp" || (conns == "auto" && cfg.omega == TruthObject::Two))
        cfg.connectives = cfkp_connectives();
      else if (conns == "bu" || (conns == "auto" && cfg.omega == TruthObject::Reals))
        cfg.connectives = bu_connectives(cfg.r_grid);
      else
        fail_at("$.situation.connectives", "expected \"kmm\", \"cfkp\", \"bu\" or \"auto\"");
    } else {
      fail_at("$.situation.preset", "unknown preset '" + preset + "'");
    }

    if (sit.contains("modalities")) {
      const Json& mods = sit.at("modalities");
      if (mods.is_string() && mods.get<std::string>() == "auto-thresholds") {
        out.auto_thresholds = true;
      } else if (mods.is_array()) {
        out.auto_thresholds = false;
        cfg.modalities.clear();
        for (std::size_t i = 0; i < mods.size(); ++i)
          cfg.modalities.push_back(detail::parse_modality(mods.at(i), cfg.functor,
                                                          "$.situation.modalities[" + std::to_string(i) + "]"));
      } else {
        fail_at("$.situation.modalities", "expected an array or \"auto-thresholds\"");
      }
    }
    if (sit.contains("clamp")) {
      cfg.clamp_lo = detail::rat_field(sit.at("clamp").at(0), "$.situation.clamp[0]");
      cfg.clamp_hi = detail::rat_field(sit.at("clamp").at(1), "$.situation.clamp[1]");
    }
    if (sit.contains("caps")) {
      const Json& caps = sit.at("caps");
      cfg.caps.vectors_per_level = caps.value("vectors_per_level", cfg.caps.vectors_per_level);
      cfg.caps.rounds_per_level = caps.value("rounds_per_level", cfg.caps.rounds_per_level);
      cfg.caps.constant_cap = caps.value("constant_cap", cfg.caps.constant_cap);
    }

    if (out.auto_thresholds) {
      cfg.modalities = threshold_modalities(cfg.functor, cfkp_thresholds(out.coalgebra));
    }
    cfg.validate();
  } catch (const validation_error&) {
    throw;
  } catch (const refusal_error&) {
    throw;
  } catch (const std::exception& e) {
    fail_at("$.situation", e.what());
  }

  out.seed = root.value("seed", 0LL);
  return out;
}

inline SystemFile load_system_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw validation_error("cannot open '" + file + "'");
  Json root;
  try {
    in >> root;
  } catch (const std::exception& e) {
    throw validation_error(file + ": " + e.what());
  }
  return load_system_json(root);
}

inline Json save_system_json(const SystemFile& sf) {
  Json root;
  Json states = Json::array();
  for (int s = 0; s < sf.coalgebra.carrier.size; ++s) states.push_back(sf.coalgebra.carrier.name(s));
  root["states"] = states;
  root["functor"] = detail::functor_to_json(sf.coalgebra.functor);
  Json next = Json::object();
  for (int s = 0; s < sf.coalgebra.carrier.size; ++s)
    next[sf.coalgebra.carrier.name(s)] =
        detail::behavior_to_json(sf.coalgebra.next[s], sf.coalgebra.functor, sf.coalgebra.carrier);
  root["next"] = next;

  Json sit;
  if (!sf.situation.preset.empty()) sit["preset"] = sf.situation.preset;
  if (sf.situation.preset.empty()) {
    sit["fiber"] = fiber_kind_name(sf.situation.fiber);
    sit["omega"] = truth_object_name(sf.situation.omega);
  }
  if (sf.situation.preset == "kmm" || sf.situation.omega == TruthObject::UnitInterval)
    sit["q_grid_denominator"] = sf.situation.q_grid_denominator;
  if (sf.auto_thresholds) {
    sit["modalities"] = "auto-thresholds";
  } else {
    Json mods = Json::array();
    for (const auto& m : sf.situation.modalities) mods.push_back(detail::modality_to_json(m));
    sit["modalities"] = mods;
  }
  root["situation"] = sit;
  if (sf.seed) root["seed"] = sf.seed;
  return root;
}

// ---------------------------------------------------------------------------
// Result rendering.

inline Json partition_json(const Partition& p, const Carrier& carrier) {
  Json blocks = Json::array();
  for (const auto& blk : p.blocks()) {
    Json b = Json::array();
    for (int s : blk) b.push_back(carrier.name(s));
    blocks.push_back(b);
  }
  return blocks;
}

inline Json metric_json(const Metric& m) {
  Json rows = Json::array();
  for (int s = 0; s < m.n; ++s) {
    Json row = Json::array();
    for (int t = 0; t < m.n; ++t) row.push_back(m.at(s, t));
    rows.push_back(row);
  }
  return rows;
}

inline Json fiber_element_json(const FiberElement& e, const Carrier& carrier) {
  if (const auto* p = std::get_if<Partition>(&e)) return partition_json(*p, carrier);
  if (const auto* m = std::get_if<Metric>(&e)) return metric_json(*m);
  const auto& b = std::get<BoolPred>(e);
  Json arr = Json::array();
  for (int s = 0; s < b.size(); ++s)
    if (b.member[s]) arr.push_back(carrier.name(s));
  return arr;
}

inline Json expressivity_report_json(const ExpressivityReport& rep, const Carrier& carrier) {
  Json j;
  j["adequate"] = rep.adequate;
  j["expressive"] = rep.expressive;
  j["eps"] = rep.eps;
  j["depth_used"] = rep.depth_used;
  j["gap_value"] = rep.gap_value;
  if (rep.gap_s >= 0) {
    j["gap_pair"] = Json::array({carrier.name(rep.gap_s), carrier.name(rep.gap_t)});
    j["witness"] = rep.witness;
  }
  j["truncated"] = rep.truncated;
  j["chain_converged"] = rep.chain_converged;
  if (!rep.adequacy_note.empty()) j["adequacy_note"] = rep.adequacy_note;
  if (!rep.kt_route.empty()) j["knaster_tarski_route"] = rep.kt_route;
  if (!rep.kleene_route.empty()) j["kleene_route"] = rep.kleene_route;
  if (!rep.gaps_by_depth.empty()) j["gaps_by_depth"] = rep.gaps_by_depth;
  return j;
}

}  // namespace codense
