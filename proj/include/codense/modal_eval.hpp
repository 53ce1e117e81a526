#pragma once

// Prepared per-coalgebra evaluation of s |-> tau_lambda(B k (next s)) for an
// observation vector k. Preset leaves get direct per-state support lists;
// anything else falls back to map_behavior on the full behavior tree.

#include <map>
#include <string>
#include <vector>

#include "codense/coalgebra.hpp"
#include "codense/modality.hpp"
#include "codense/rational.hpp"
#include "codense/situation.hpp"

namespace codense {

class ModalEvaluator {
 public:
  ModalEvaluator(const SituationConfig& cfg, const Coalgebra& c) : cfg_(&cfg), coalgebra_(&c) {
    int n = c.carrier.size;
    prepared_.resize(cfg.modalities.size());
    for (std::size_t mi = 0; mi < cfg.modalities.size(); ++mi) {
      const ModalityDef& m = cfg.modalities[mi];
      Prepared& p = prepared_[mi];
      p.path_id = intern_path(m);
      switch (m.leaf) {
        case LeafEval::ExpectedValue:
        case LeafEval::Threshold: {
          p.kind = Prepared::Kind::Dist;
          ensure_dist_supports(p.path_id, m, n);
          break;
        }
        case LeafEval::Sup:
        case LeafEval::Inf:
        case LeafEval::Diamond:
        case LeafEval::Box: {
          p.kind = Prepared::Kind::Set;
          p.successors.resize(n);
          for (int s = 0; s < n; ++s) {
            const BehaviorValue& v = select_component(m, c.next[s]);
            for (const auto& e : v.items) p.successors[s].push_back(std::get<int>(e.leaf));
          }
          break;
        }
        case LeafEval::IdentityLeaf: {
          p.kind = Prepared::Kind::Target;
          p.targets.resize(n);
          for (int s = 0; s < n; ++s)
            p.targets[s] = std::get<int>(select_component(m, c.next[s]).leaf);
          break;
        }
        case LeafEval::ConstTable: {
          p.kind = Prepared::Kind::Fixed;
          p.fixed.resize(n);
          for (int s = 0; s < n; ++s)
            p.fixed[s] = m.const_table.at(select_component(m, c.next[s]).const_index);
          break;
        }
        case LeafEval::CustomTable: p.kind = Prepared::Kind::Generic; break;
      }
    }
  }

  int carrier_size() const { return coalgebra_->carrier.size; }
  const SituationConfig& config() const { return *cfg_; }
  const Coalgebra& coalgebra() const { return *coalgebra_; }

  // tau_mi(B k (next s)) for all s.
  std::vector<double> observe(int mi, const std::vector<double>& k) const {
    const ModalityDef& m = cfg_->modalities[mi];
    const Prepared& p = prepared_[mi];
    int n = carrier_size();
    std::vector<double> out(n);
    switch (p.kind) {
      case Prepared::Kind::Dist: {
        const auto& supp = dist_supports_.at(p.path_id);
        if (m.leaf == LeafEval::ExpectedValue) {
          for (int s = 0; s < n; ++s) {
            double acc = 0;
            for (const auto& [x, w, wd] : supp[s]) acc += k[x] * wd;
            out[s] = acc;
          }
        } else {
          std::vector<Rat> mass = masses(p.path_id, k);
          for (int s = 0; s < n; ++s) out[s] = mass[s] > m.threshold ? 1.0 : 0.0;
        }
        return out;
      }
      case Prepared::Kind::Set: {
        for (int s = 0; s < n; ++s) {
          const auto& succ = p.successors[s];
          switch (m.leaf) {
            case LeafEval::Sup: {
              double best = 0.0;
              bool first = true;
              for (int x : succ) best = first ? (first = false, k[x]) : std::max(best, k[x]);
              out[s] = best;
              break;
            }
            case LeafEval::Inf: {
              double best = 1.0;
              bool first = true;
              for (int x : succ) best = first ? (first = false, k[x]) : std::min(best, k[x]);
              out[s] = best;
              break;
            }
            case LeafEval::Diamond: {
              out[s] = 0.0;
              for (int x : succ)
                if (k[x] == 1.0) {
                  out[s] = 1.0;
                  break;
                }
              break;
            }
            default: {  // Box
              out[s] = 1.0;
              for (int x : succ)
                if (k[x] != 1.0) {
                  out[s] = 0.0;
                  break;
                }
              break;
            }
          }
        }
        return out;
      }
      case Prepared::Kind::Target:
        for (int s = 0; s < n; ++s) out[s] = k[p.targets[s]];
        return out;
      case Prepared::Kind::Fixed: return p.fixed;
      case Prepared::Kind::Generic: {
        auto km = omega_map(k);
        for (int s = 0; s < n; ++s)
          out[s] = eval_modality(m, map_behavior(coalgebra_->functor, coalgebra_->next[s], km));
        return out;
      }
    }
    return out;
  }

  // Exact per-state mass of {x : k[x] == 1} under the distribution selected by
  // the given path. Shared by every threshold modality on that path.
  std::vector<Rat> masses(int path_id, const std::vector<double>& k) const {
    const auto& supp = dist_supports_.at(path_id);
    std::vector<Rat> mass(supp.size(), Rat(0));
    for (std::size_t s = 0; s < supp.size(); ++s)
      for (const auto& [x, w, wd] : supp[s])
        if (k[x] == 1.0) mass[s] += w;
    return mass;
  }

  int path_id_of(int mi) const { return prepared_[mi].path_id; }
  bool is_threshold(int mi) const { return cfg_->modalities[mi].leaf == LeafEval::Threshold; }

  struct SupportEntry {
    int state;
    Rat weight;
    double weight_d;
  };
  const std::vector<std::vector<SupportEntry>>& dist_support(int path_id) const {
    return dist_supports_.at(path_id);
  }

 private:
  struct Prepared {
    enum class Kind { Dist, Set, Target, Fixed, Generic };
    Kind kind = Kind::Generic;
    int path_id = -1;
    std::vector<std::vector<int>> successors;
    std::vector<int> targets;
    std::vector<double> fixed;
  };

  static std::string path_signature(const ModalityDef& m) {
    std::string sig;
    for (const auto& sel : m.path) {
      switch (sel.kind) {
        case Selector::Kind::First: sig += "<"; break;
        case Selector::Kind::Second: sig += ">"; break;
        case Selector::Kind::Label: sig += "." + std::to_string(sel.label_idx); break;
      }
    }
    return sig;
  }

  int intern_path(const ModalityDef& m) {
    std::string sig = path_signature(m);
    auto [it, fresh] = path_ids_.emplace(sig, static_cast<int>(path_ids_.size()));
    return it->second;
  }

  void ensure_dist_supports(int path_id, const ModalityDef& m, int n) {
    if (dist_supports_.count(path_id)) return;
    std::vector<std::vector<SupportEntry>> supp(n);
    for (int s = 0; s < n; ++s) {
      const BehaviorValue& v = select_component(m, coalgebra_->next[s]);
      for (std::size_t i = 0; i < v.items.size(); ++i)
        supp[s].push_back({std::get<int>(v.items[i].leaf), v.weights[i], to_double(v.weights[i])});
    }
    dist_supports_.emplace(path_id, std::move(supp));
  }

  const SituationConfig* cfg_;
  const Coalgebra* coalgebra_;
  std::vector<Prepared> prepared_;
  std::map<std::string, int> path_ids_;
  std::map<int, std::vector<std::vector<SupportEntry>>> dist_supports_;
};

}  // namespace codense
