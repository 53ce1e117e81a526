#pragma once

// Modal-logic syntax, inductive semantics, modal depth, and closure-based
// generation of logical observations up to a depth bound. Generation
// deduplicates semantically (exact equality for two-valued truth, sup-norm
// 1e-9 otherwise) and keeps one witness formula of minimal construction order
// per distinct vector.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "codense/fiber.hpp"
#include "codense/modal_eval.hpp"
#include "codense/situation.hpp"

namespace codense {

struct Formula;
using FormulaRef = std::shared_ptr<const Formula>;

struct Formula {
  bool is_modal = false;
  int index = 0;  // connective or modality index in the situation
  std::vector<FormulaRef> children;

  static FormulaRef conn(int ci, std::vector<FormulaRef> kids) {
    return std::make_shared<Formula>(Formula{false, ci, std::move(kids)});
  }
  static FormulaRef modal(int mi, FormulaRef kid) {
    return std::make_shared<Formula>(Formula{true, mi, {std::move(kid)}});
  }
};

inline int depth(const FormulaRef& f) {
  if (f->is_modal) return depth(f->children[0]) + 1;
  int d = 0;
  for (const auto& k : f->children) d = std::max(d, depth(k));
  return d;
}

inline int formula_size(const FormulaRef& f) {
  int s = 1;
  for (const auto& k : f->children) s += formula_size(k);
  return s;
}

inline std::string print_formula(const FormulaRef& f, const SituationConfig& cfg) {
  if (f->is_modal)
    return "dia[" + cfg.modalities[f->index].name + "](" + print_formula(f->children[0], cfg) + ")";
  const ConnectiveDef& c = cfg.connectives[f->index];
  if (c.arity == 0) return c.name;
  std::string out = c.name + "(";
  if (c.param) out += rat_to_string(*c.param) + ",";
  for (std::size_t i = 0; i < f->children.size(); ++i) {
    if (i) out += ",";
    out += print_formula(f->children[i], cfg);
  }
  return out + ")";
}

namespace detail {

struct FormulaParser {
  const SituationConfig& cfg;
  std::string text;  // whitespace stripped
  std::size_t pos = 0;

  FormulaParser(const SituationConfig& cfg_, std::string_view raw) : cfg(cfg_) {
    for (char ch : raw)
      if (!std::isspace(static_cast<unsigned char>(ch))) text += ch;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("formula parse error at offset " + std::to_string(pos) + ": " + msg);
  }

  void expect(char ch) {
    if (pos >= text.size() || text[pos] != ch) fail(std::string("expected '") + ch + "'");
    ++pos;
  }

  std::string take_while(auto pred) {
    std::size_t start = pos;
    while (pos < text.size() && pred(text[pos])) ++pos;
    return text.substr(start, pos - start);
  }

  FormulaRef parse() {
    FormulaRef f = parse_formula();
    if (pos != text.size()) fail("trailing input");
    return f;
  }

  FormulaRef parse_formula() {
    std::string head = take_while([](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
    if (head.empty()) fail("expected a connective or dia[...]");
    if (head == "dia") {
      expect('[');
      std::string name = take_while([](char c) { return c != ']'; });
      expect(']');
      int mi = cfg.modality_index(name);
      if (mi < 0) fail("unknown modality '" + name + "'");
      expect('(');
      FormulaRef kid = parse_formula();
      expect(')');
      return Formula::modal(mi, kid);
    }
    // Nullary heads appear bare.
    int ci0 = cfg.connective_index(head, std::nullopt);
    if (ci0 >= 0 && cfg.connectives[ci0].arity == 0 && (pos >= text.size() || text[pos] != '(')) {
      return Formula::conn(ci0, {});
    }
    // Heads with a parameter carry it as the first argument: minus(q,phi).
    bool parametric = false;
    for (const auto& c : cfg.connectives)
      if (c.name == head && c.param) parametric = true;
    bool known = parametric;
    for (const auto& c : cfg.connectives)
      if (c.name == head) known = true;
    if (!known) fail("unknown connective '" + head + "'");
    expect('(');
    std::optional<Rat> param;
    if (parametric) {
      std::string num = take_while([](char c) { return c == '-' || c == '+' || c == '/' || std::isdigit(static_cast<unsigned char>(c)); });
      if (num.empty()) fail("expected a rational parameter");
      param = parse_rat(num);
      expect(',');
    }
    int ci = cfg.connective_index(head, param);
    if (ci < 0)
      fail(param ? "parameter " + rat_to_string(*param) + " of '" + head + "' is not in the configured grid"
                 : "unknown connective '" + head + "'");
    std::vector<FormulaRef> kids;
    for (int i = 0; i < cfg.connectives[ci].arity; ++i) {
      if (i) expect(',');
      kids.push_back(parse_formula());
    }
    expect(')');
    return Formula::conn(ci, std::move(kids));
  }
};

}  // namespace detail

inline FormulaRef parse_formula(const SituationConfig& cfg, std::string_view text) {
  detail::FormulaParser p(cfg, text);
  return p.parse();
}

inline std::vector<double> eval_formula(const FormulaRef& f, const Coalgebra& c, const SituationConfig& cfg,
                                        const ModalEvaluator& ev) {
  int n = c.carrier.size;
  if (f->is_modal) return ev.observe(f->index, eval_formula(f->children[0], c, cfg, ev));
  const ConnectiveDef& conn = cfg.connectives[f->index];
  std::vector<std::vector<double>> kids;
  kids.reserve(f->children.size());
  for (const auto& k : f->children) kids.push_back(eval_formula(k, c, cfg, ev));
  std::vector<double> out(n);
  double args[2];
  for (int s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < kids.size(); ++i) args[i] = kids[i][s];
    out[s] = conn.apply(args);
  }
  return out;
}

inline std::vector<double> eval_formula(const FormulaRef& f, const Coalgebra& c, const SituationConfig& cfg) {
  ModalEvaluator ev(cfg, c);
  return eval_formula(f, c, cfg, ev);
}

struct GeneratedEntry {
  FormulaRef formula;
  std::vector<double> vec;
  int level = 0;  // depth bound at which the vector first appeared
  int depth = 0;
  int size = 0;
  int order = 0;
};

struct GeneratedSet {
  std::vector<GeneratedEntry> entries;
  std::vector<int> count_after_level;  // entries present once each level closed
  bool truncated = false;
  int depth_bound = 0;

  // Entries visible at depth bound n.
  std::size_t count_at(int n) const {
    if (n < 0) return 0;
    if (n >= static_cast<int>(count_after_level.size())) return entries.size();
    return static_cast<std::size_t>(count_after_level[n]);
  }
};

namespace detail {

class Dedup {
 public:
  explicit Dedup(double tol) : tol_(tol) {}

  // Index of an entry equal to v (within tolerance), or -1.
  int find(const std::vector<GeneratedEntry>& entries, const std::vector<double>& v) const {
    long long key = quantize(v[0]);
    for (long long k = key - 1; k <= key + 1; ++k) {
      auto it = buckets_.find(k);
      if (it == buckets_.end()) continue;
      for (int idx : it->second)
        if (close(entries[idx].vec, v)) return idx;
    }
    return -1;
  }

  void add(int idx, const std::vector<double>& v) { buckets_[quantize(v[0])].push_back(idx); }

 private:
  static long long quantize(double x) { return llround(x * 1e6); }
  bool close(const std::vector<double>& a, const std::vector<double>& b) const {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i] - b[i]) > tol_) return false;
    return true;
  }
  double tol_;
  std::unordered_map<long long, std::vector<int>> buckets_;
};

// Applying these would only reproduce the operand.
inline bool is_identity_connective(const ConnectiveDef& c) {
  return (c.kind == ConnKind::MinusQ && *c.param == 0) || (c.kind == ConnKind::AddR && *c.param == 0) ||
         (c.kind == ConnKind::ScaleR && *c.param == 1);
}

}  // namespace detail

inline GeneratedSet generate_semantics(const SituationConfig& cfg, const Coalgebra& c, int depth_bound,
                                       std::optional<GenerationCaps> caps_opt = {}) {
  GenerationCaps caps = caps_opt.value_or(cfg.caps);
  const int n = c.carrier.size;
  const bool two_valued = cfg.omega == TruthObject::Two;
  const bool clamp = cfg.omega == TruthObject::Reals;
  const double lo = to_double(cfg.clamp_lo), hi = to_double(cfg.clamp_hi);

  ModalEvaluator ev(cfg, c);
  GeneratedSet out;
  out.depth_bound = depth_bound;
  detail::Dedup dedup(two_valued ? 0.0 : kMetricTol);

  // Prebuilt pieces of the clamp wrapper min(hi*one, -min(-phi, (-lo)*one)).
  int ci_one = -1, ci_min = -1, ci_neg_scale = -1, ci_hi_scale = -1, ci_neglo_scale = -1;
  if (clamp) {
    for (std::size_t i = 0; i < cfg.connectives.size(); ++i) {
      const auto& cd = cfg.connectives[i];
      if (cd.arity == 0) ci_one = static_cast<int>(i);
      if (cd.kind == ConnKind::Min) ci_min = static_cast<int>(i);
      if (cd.kind == ConnKind::ScaleR && cd.param == Rat(-1)) ci_neg_scale = static_cast<int>(i);
      if (cd.kind == ConnKind::ScaleR && cd.param == cfg.clamp_hi) ci_hi_scale = static_cast<int>(i);
      if (cd.kind == ConnKind::ScaleR && cd.param == -cfg.clamp_lo) ci_neglo_scale = static_cast<int>(i);
    }
    if (ci_one < 0 || ci_min < 0 || ci_neg_scale < 0 || ci_hi_scale < 0 || ci_neglo_scale < 0)
      throw std::invalid_argument("real-valued generation needs one, min and scale by -1, hi, -lo in the grid");
  }

  auto wrap_clamp = [&](FormulaRef f) {
    FormulaRef one = Formula::conn(ci_one, {});
    FormulaRef top_c = Formula::conn(ci_hi_scale, {one});
    FormulaRef low_c = Formula::conn(ci_neglo_scale, {one});
    FormulaRef inner = Formula::conn(ci_min, {Formula::conn(ci_neg_scale, {f}), low_c});
    return Formula::conn(ci_min, {top_c, Formula::conn(ci_neg_scale, {inner})});
  };

  int added_this_level = 0;
  int constants_added = 0;
  std::vector<double> scratch(n);
  // Inserts a candidate (clamping it in place for real truth values); the
  // formula is only built when the vector is new. Returns false once the
  // level budget is exhausted.
  auto insert = [&](std::vector<double>& v, auto&& make_formula, int level) -> bool {
    if (added_this_level >= caps.vectors_per_level) {
      out.truncated = true;
      return false;
    }
    bool clamped = false;
    if (clamp) {
      for (double& x : v) {
        if (x < lo) x = lo, clamped = true;
        if (x > hi) x = hi, clamped = true;
      }
    }
    if (dedup.find(out.entries, v) >= 0) return true;
    if (clamp) {
      bool constant = true;
      for (double x : v)
        if (x != v[0]) constant = false;
      if (constant) {
        if (constants_added >= caps.constant_cap) return true;
        ++constants_added;
      }
    }
    GeneratedEntry e;
    e.formula = make_formula();
    if (clamped) e.formula = wrap_clamp(e.formula);
    e.vec = v;
    e.level = level;
    e.depth = depth(e.formula);
    e.size = formula_size(e.formula);
    e.order = static_cast<int>(out.entries.size());
    dedup.add(e.order, e.vec);
    out.entries.push_back(std::move(e));
    ++added_this_level;
    return true;
  };

  // Unary orbits carry the per-pair separations (chains of negation, shift,
  // scale) and starve if other candidates flood the budget, so every fresh
  // vector's complete orbit goes in before the next candidate is considered.
  auto unary_orbit = [&](std::size_t src, int level) -> bool {
    std::vector<std::size_t> work = {src};
    while (!work.empty()) {
      std::size_t i = work.back();
      work.pop_back();
      for (std::size_t ci = 0; ci < cfg.connectives.size(); ++ci) {
        const ConnectiveDef& conn = cfg.connectives[ci];
        if (conn.arity != 1 || detail::is_identity_connective(conn)) continue;
        for (int s = 0; s < n; ++s) scratch[s] = conn.apply(&out.entries[i].vec[s]);
        std::size_t before = out.entries.size();
        if (!insert(
                scratch, [&] { return Formula::conn(static_cast<int>(ci), {out.entries[i].formula}); },
                level))
          return false;
        if (out.entries.size() > before) work.push_back(before);
      }
    }
    return true;
  };

  auto unary_saturate = [&](int level, std::size_t from) -> bool {
    for (std::size_t src = from; src < out.entries.size(); ++src)
      if (!unary_orbit(src, level)) return false;
    return true;
  };

  // Connective closure of everything added since the level began.
  auto closure = [&](int level, std::size_t frontier_begin) {
    if (!unary_saturate(level, frontier_begin)) return;
    std::size_t new_begin = frontier_begin;
    for (int round = 0; round < caps.rounds_per_level; ++round) {
      std::size_t new_end = out.entries.size();
      if (new_begin == new_end) return;
      bool budget_left = true;
      for (std::size_t ci = 0; ci < cfg.connectives.size() && budget_left; ++ci) {
        const ConnectiveDef& conn = cfg.connectives[ci];
        if (conn.arity == 0 || detail::is_identity_connective(conn)) continue;
        if (conn.arity == 1) {
          for (std::size_t i = new_begin; i < new_end && budget_left; ++i) {
            for (int s = 0; s < n; ++s) scratch[s] = conn.apply(&out.entries[i].vec[s]);
            budget_left = insert(
                scratch, [&] { return Formula::conn(static_cast<int>(ci), {out.entries[i].formula}); }, level);
          }
        } else {
          const bool is_meet = conn.kind == ConnKind::Min || conn.kind == ConnKind::And;
          for (std::size_t i = new_begin; i < new_end && budget_left; ++i) {
            std::size_t j_end = conn.commutative ? i : new_end;
            for (std::size_t j = 0; j < j_end && budget_left; ++j) {
              const auto& vi = out.entries[i].vec;
              const auto& vj = out.entries[j].vec;
              if (is_meet) {
                // pointwise-comparable pairs only reproduce an operand
                bool i_le = true, j_le = true;
                for (int s = 0; s < n && (i_le || j_le); ++s) {
                  if (vi[s] > vj[s]) i_le = false;
                  if (vj[s] > vi[s]) j_le = false;
                }
                if (i_le || j_le) continue;
              }
              double args[2];
              for (int s = 0; s < n; ++s) {
                args[0] = vi[s];
                args[1] = vj[s];
                scratch[s] = conn.apply(args);
              }
              budget_left = insert(
                  scratch,
                  [&] {
                    return Formula::conn(static_cast<int>(ci),
                                         {out.entries[i].formula, out.entries[j].formula});
                  },
                  level);
              if (!conn.commutative && budget_left && i != j) {
                for (int s = 0; s < n; ++s) {
                  args[0] = vj[s];
                  args[1] = vi[s];
                  scratch[s] = conn.apply(args);
                }
                budget_left = insert(
                    scratch,
                    [&] {
                      return Formula::conn(static_cast<int>(ci),
                                           {out.entries[j].formula, out.entries[i].formula});
                    },
                    level);
              }
            }
          }
        }
      }
      if (!budget_left) return;
      new_begin = new_end;
    }
    if (out.entries.size() > new_begin) out.truncated = true;  // closure still open at the round cap
  };

  // Level 0: closure of the nullary connectives.
  added_this_level = 0;
  for (std::size_t ci = 0; ci < cfg.connectives.size(); ++ci)
    if (cfg.connectives[ci].arity == 0)
    {
      std::vector<double> seed(n, cfg.connectives[ci].apply(nullptr));
      insert(seed, [&] { return Formula::conn(static_cast<int>(ci), {}); }, 0);
    }
  closure(0, 0);
  out.count_after_level.push_back(static_cast<int>(out.entries.size()));

  for (int level = 1; level <= depth_bound; ++level) {
    added_this_level = 0;
    std::size_t frontier_begin = out.entries.size();
    std::size_t modal_from = level >= 2 ? out.count_after_level[level - 2] : 0;
    std::size_t modal_to = out.count_after_level[level - 1];

    // Per-pair extremal vectors drive the distance iteration; their modal
    // steps and unary orbits go in before the budget can run out on breadth.
    std::vector<std::size_t> sources;
    std::vector<char> taken(modal_to, 0);
    for (int s = 0; s < n; ++s)
      for (int t = s + 1; t < n; ++t) {
        std::size_t best = modal_to;
        double best_sep = 0;
        for (std::size_t i = 0; i < modal_to; ++i) {
          double sep = std::abs(out.entries[i].vec[s] - out.entries[i].vec[t]);
          if (sep > best_sep + kMetricTol) {
            best_sep = sep;
            best = i;
          }
        }
        if (best < modal_to && !taken[best]) {
          taken[best] = 1;
          sources.push_back(best);
        }
      }
    std::size_t priority_count = sources.size();
    for (std::size_t src = modal_from; src < modal_to; ++src)
      if (!taken[src]) sources.push_back(src);

    // Threshold masses per (path, source vector) are shared across thresholds.
    std::vector<std::size_t> priority_outputs;
    bool budget_left = true;
    for (std::size_t si = 0; si < sources.size() && budget_left; ++si) {
      std::size_t src = sources[si];
      std::map<int, std::vector<Rat>> mass_cache;
      for (std::size_t mi = 0; mi < cfg.modalities.size() && budget_left; ++mi) {
        std::vector<double> v;
        if (ev.is_threshold(static_cast<int>(mi))) {
          int pid = ev.path_id_of(static_cast<int>(mi));
          auto it = mass_cache.find(pid);
          if (it == mass_cache.end())
            it = mass_cache.emplace(pid, ev.masses(pid, out.entries[src].vec)).first;
          const Rat& r = cfg.modalities[mi].threshold;
          v.resize(n);
          for (int s = 0; s < n; ++s) v[s] = it->second[s] > r ? 1.0 : 0.0;
        } else {
          v = ev.observe(static_cast<int>(mi), out.entries[src].vec);
        }
        std::size_t before = out.entries.size();
        budget_left = insert(
            v, [&] { return Formula::modal(static_cast<int>(mi), out.entries[src].formula); }, level);
        if (budget_left && si < priority_count && out.entries.size() > before) {
          if (priority_outputs.size() < 16) priority_outputs.push_back(before);
          budget_left = unary_orbit(before, level);
        }
      }
    }
    // Meets over the priority outputs and their flips assemble the piecewise
    // observations single unary chains cannot reach.
    if (budget_left) {
      int ci_meet = -1, ci_flip = -1;
      for (std::size_t ci = 0; ci < cfg.connectives.size(); ++ci) {
        const ConnectiveDef& cd = cfg.connectives[ci];
        if (cd.kind == ConnKind::Min || cd.kind == ConnKind::And) ci_meet = static_cast<int>(ci);
        if (cd.kind == ConnKind::Neg || (cd.kind == ConnKind::ScaleR && cd.param == Rat(-1)))
          ci_flip = static_cast<int>(ci);
      }
      std::vector<std::size_t> pool = priority_outputs;
      if (ci_flip >= 0) {
        for (std::size_t idx : priority_outputs) {
          if (!budget_left) break;
          for (int s = 0; s < n; ++s) scratch[s] = cfg.connectives[ci_flip].apply(&out.entries[idx].vec[s]);
          std::size_t before = out.entries.size();
          budget_left = insert(
              scratch, [&] { return Formula::conn(ci_flip, {out.entries[idx].formula}); }, level);
          if (out.entries.size() > before) pool.push_back(before);
        }
      }
      if (ci_meet >= 0) {
        for (std::size_t a = 0; a < pool.size() && budget_left; ++a)
          for (std::size_t b = 0; b < a && budget_left; ++b) {
            std::size_t i = pool[a], j = pool[b];
            for (int s = 0; s < n; ++s)
              scratch[s] = std::min(out.entries[i].vec[s], out.entries[j].vec[s]);
            std::size_t before = out.entries.size();
            budget_left = insert(
                scratch,
                [&] { return Formula::conn(ci_meet, {out.entries[i].formula, out.entries[j].formula}); },
                level);
            if (budget_left && out.entries.size() > before) budget_left = unary_orbit(before, level);
          }
      }
    }
    closure(level, frontier_begin);
    out.count_after_level.push_back(static_cast<int>(out.entries.size()));
  }
  return out;
}

struct LogicalPredicateResult {
  FiberElement element;
  bool truncated = false;
  bool lower_bound = true;  // finite depth: possibly less discriminating than the full logic
  int depth = 0;
};

inline LogicalPredicateResult logical_predicate_from(const SituationConfig& cfg, const Coalgebra& c,
                                                     const GeneratedSet& gen, int n_depth) {
  int n = c.carrier.size;
  std::size_t count = gen.count_at(n_depth);
  LogicalPredicateResult out;
  out.truncated = gen.truncated;
  out.depth = n_depth;
  switch (cfg.fiber) {
    case FiberKind::EqRel: {
      if (cfg.omega == TruthObject::Two) {
        std::vector<std::vector<double>> keys(n);
        for (std::size_t i = 0; i < count; ++i)
          for (int s = 0; s < n; ++s) keys[s].push_back(gen.entries[i].vec[s]);
        out.element = partition_by_key(keys);
      } else {
        std::vector<std::vector<double>> vecs;
        for (std::size_t i = 0; i < count; ++i) vecs.push_back(gen.entries[i].vec);
        out.element = kernel_partition_tol(vecs, n, kMetricTol);
      }
      return out;
    }
    case FiberKind::PMet1: {
      Metric d = Metric::zero(n);
      for (std::size_t i = 0; i < count; ++i)
        for (int s = 0; s < n; ++s)
          for (int t = s + 1; t < n; ++t) {
            double sep = std::abs(gen.entries[i].vec[s] - gen.entries[i].vec[t]);
            if (sep > d.at(s, t)) d.set(s, t, std::min(sep, 1.0));
          }
      out.element = std::move(d);
      return out;
    }
    case FiberKind::BoolPred:
      throw std::invalid_argument("logical predicate is not defined for the boolpred fiber");
  }
  throw std::logic_error("unreachable");
}

inline LogicalPredicateResult logical_predicate(const SituationConfig& cfg, const Coalgebra& c, int n_depth,
                                                std::optional<GenerationCaps> caps = {}) {
  GeneratedSet gen = generate_semantics(cfg, c, n_depth, caps);
  return logical_predicate_from(cfg, c, gen, n_depth);
}

struct WitnessResult {
  FormulaRef formula;
  double separation = 0;
};

inline WitnessResult witness_formula_from(const GeneratedSet& gen, int s, int t, int n_depth) {
  std::size_t count = gen.count_at(n_depth);
  if (count == 0) throw std::invalid_argument("witness requested from an empty generated set");
  int best = 0;
  double best_sep = -1;
  for (std::size_t i = 0; i < count; ++i) {
    const GeneratedEntry& e = gen.entries[i];
    double sep = std::abs(e.vec[s] - e.vec[t]);
    if (sep > best_sep + kMetricTol) {
      best = static_cast<int>(i);
      best_sep = sep;
      continue;
    }
    if (std::abs(sep - best_sep) <= kMetricTol) {
      const GeneratedEntry& b = gen.entries[best];
      if (e.depth < b.depth || (e.depth == b.depth && e.size < b.size) ||
          (e.depth == b.depth && e.size == b.size && e.order < b.order))
        best = static_cast<int>(i);
    }
  }
  return {gen.entries[best].formula, best_sep};
}

inline WitnessResult witness_formula(const SituationConfig& cfg, const Coalgebra& c, int s, int t, int n_depth,
                                     std::optional<GenerationCaps> caps = {}) {
  if (s == t) throw std::invalid_argument("witness needs two distinct states");
  GeneratedSet gen = generate_semantics(cfg, c, n_depth, caps);
  return witness_formula_from(gen, s, t, n_depth);
}

}  // namespace codense
