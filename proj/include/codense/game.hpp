#pragma once

// The codensity bisimilarity game. Positions alternate between fiber elements
// (Spoiler to move: propose an observation k whose lifted kernel the current
// predicate escapes) and observations (Duplicator to move: challenge k's
// legitimacy with a predicate P not below k's kernel). A stuck player loses;
// long plays are scored for Duplicator at a configurable cutoff. Optimal play
// comes from the computed gfp: P is winning for Duplicator iff P is below nu.
// A brute-force attractor solver over all positions cross-checks that on
// small two-valued instances.

#include <functional>
#include <iosfwd>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "codense/fixpoint.hpp"
#include "codense/logic.hpp"

namespace codense {

struct GamePosition {
  bool is_observation = false;
  FiberElement predicate;          // Duplicator has just moved
  std::vector<double> observation; // Spoiler has just moved

  static GamePosition pred(FiberElement p) { return {false, std::move(p), {}}; }
  static GamePosition obs(std::vector<double> k) { return {true, Partition{}, std::move(k)}; }
};

// Pullback of the observation predicate along k: the kernel partition for
// two-valued truth, the induced pseudometric otherwise.
inline FiberElement observation_pullback(const SituationConfig& cfg, const std::vector<double>& k) {
  if (cfg.fiber == FiberKind::PMet1) {
    Metric m = Metric::zero(static_cast<int>(k.size()));
    for (int s = 0; s < m.n; ++s)
      for (int t = s + 1; t < m.n; ++t) m.set(s, t, std::min(std::abs(k[s] - k[t]), 1.0));
    return m;
  }
  return kernel_partition_exact(k);
}

// Spoiler's side condition from Table-style move rules: some modality lifts k
// to an observation of behaviors that the current predicate does not respect.
// Returns the witnessing modality index, or -1.
inline int spoiler_condition(const ModalEvaluator& ev, const FiberElement& P, const std::vector<double>& k) {
  const SituationConfig& cfg = ev.config();
  int n = ev.carrier_size();
  for (std::size_t mi = 0; mi < cfg.modalities.size(); ++mi) {
    std::vector<double> o = ev.observe(static_cast<int>(mi), k);
    if (cfg.fiber == FiberKind::PMet1) {
      const Metric& d = std::get<Metric>(P);
      for (int s = 0; s < n; ++s)
        for (int t = s + 1; t < n; ++t)
          if (d.at(s, t) < std::abs(o[s] - o[t]) - kMetricTol) return static_cast<int>(mi);
    } else {
      const Partition& p = std::get<Partition>(P);
      for (int s = 0; s < n; ++s)
        for (int t = s + 1; t < n; ++t)
          if (p.same_block(s, t) && o[s] != o[t]) return static_cast<int>(mi);
    }
  }
  return -1;
}

// All legal Spoiler moves. Two-valued truth enumerates every k in 2^X
// (carrier <= 12); otherwise k ranges over the supplied candidate pool.
inline std::vector<std::vector<double>> spoiler_moves(const SituationConfig& cfg, const Coalgebra& c,
                                                      const FiberElement& P,
                                                      const std::vector<std::vector<double>>& pool = {}) {
  ModalEvaluator ev(cfg, c);
  std::vector<std::vector<double>> out;
  int n = c.carrier.size;
  if (cfg.omega == TruthObject::Two) {
    if (n > 12) throw refusal_error("spoiler_moves: full 2^X enumeration needs carrier <= 12");
    std::vector<double> k(n);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      for (int s = 0; s < n; ++s) k[s] = (mask >> s) & 1u ? 1.0 : 0.0;
      if (spoiler_condition(ev, P, k) >= 0) out.push_back(k);
    }
    return out;
  }
  for (const auto& k : pool)
    if (spoiler_condition(ev, P, k) >= 0) out.push_back(k);
  return out;
}

// Duplicator's legal responses must escape k's kernel. The optimal engine
// plays nu when possible; enumeration of all predicates lives in brute_solve.
inline std::optional<FiberElement> duplicator_optimal_move(const SituationConfig& cfg,
                                                           const std::vector<double>& k,
                                                           const FiberElement& nu) {
  if (!leq(nu, observation_pullback(cfg, k))) return nu;
  return std::nullopt;
}

struct SolveResult {
  bool duplicator_wins = false;
  std::optional<FiberElement> optimal_move;  // for observation positions
};

inline SolveResult solve_position(const SituationConfig& cfg, const Coalgebra& c, const GamePosition& pos,
                                  const FiberElement& nu) {
  SolveResult out;
  if (!pos.is_observation) {
    out.duplicator_wins = leq(pos.predicate, nu);
    return out;
  }
  auto move = duplicator_optimal_move(cfg, pos.observation, nu);
  out.duplicator_wins = move.has_value();
  out.optimal_move = std::move(move);
  return out;
}

inline SolveResult solve_position(const SituationConfig& cfg, const Coalgebra& c, const GamePosition& pos) {
  auto [nu, report] = kleene_gfp(cfg, c);
  return solve_position(cfg, c, pos, nu);
}

// ---------------------------------------------------------------------------
// Brute-force safety-game solver over the full position space (two-valued
// eqrel, carrier <= 5): greatest-fixed-point attractor on the explicit
// bipartite game graph.
struct BruteSolveResult {
  std::vector<Partition> predicates;         // all partitions, enumeration order
  std::vector<char> predicate_winning;       // Duplicator wins from P
  std::vector<std::vector<double>> observations;  // all k in 2^X
  std::vector<char> observation_winning;
};

inline std::vector<Partition> all_partitions(int n) {
  // restricted growth strings
  std::vector<Partition> out;
  std::vector<int> rgs(n, 0);
  auto rec = [&](auto&& self, int i, int maxv) -> void {
    if (i == n) {
      out.push_back(canonical_partition(rgs));
      return;
    }
    for (int v = 0; v <= maxv + 1; ++v) {
      rgs[i] = v;
      self(self, i + 1, std::max(maxv, v));
    }
  };
  rec(rec, 1, 0);  // rgs[0] = 0 fixed
  return out;
}

inline BruteSolveResult brute_solve(const SituationConfig& cfg, const Coalgebra& c) {
  if (cfg.omega != TruthObject::Two)
    throw validation_error("brute_solve covers two-valued eqrel instances");
  int n = c.carrier.size;
  if (n > 5) throw refusal_error("brute_solve: carrier larger than 5");
  ModalEvaluator ev(cfg, c);

  BruteSolveResult res;
  res.predicates = all_partitions(n);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<double> k(n);
    for (int s = 0; s < n; ++s) k[s] = (mask >> s) & 1u ? 1.0 : 0.0;
    res.observations.push_back(std::move(k));
  }
  int P = static_cast<int>(res.predicates.size());
  int K = static_cast<int>(res.observations.size());

  // edges
  std::vector<std::vector<int>> spoiler_edges(P);  // P-position -> k-positions
  std::vector<std::vector<int>> dupl_edges(K);     // k-position -> P-positions
  std::vector<Partition> kernels(K);
  for (int j = 0; j < K; ++j) kernels[j] = std::get<Partition>(observation_pullback(cfg, res.observations[j]));
  for (int i = 0; i < P; ++i)
    for (int j = 0; j < K; ++j)
      if (spoiler_condition(ev, FiberElement(res.predicates[i]), res.observations[j]) >= 0)
        spoiler_edges[i].push_back(j);
  for (int j = 0; j < K; ++j)
    for (int i = 0; i < P; ++i)
      if (!leq(FiberElement(res.predicates[i]), FiberElement(kernels[j]))) dupl_edges[j].push_back(i);

  // Duplicator's losing region, grown to a fixed point: an observation
  // position is losing when every response loses (in particular when stuck);
  // a predicate position is losing when some Spoiler move wins for Spoiler.
  std::vector<char> p_lost(P, 0), k_lost(K, 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int j = 0; j < K; ++j) {
      if (k_lost[j]) continue;
      bool all_lost = true;
      for (int i : dupl_edges[j])
        if (!p_lost[i]) {
          all_lost = false;
          break;
        }
      if (all_lost) {
        k_lost[j] = 1;
        changed = true;
      }
    }
    for (int i = 0; i < P; ++i) {
      if (p_lost[i]) continue;
      for (int j : spoiler_edges[i])
        if (k_lost[j]) {
          p_lost[i] = 1;
          changed = true;
          break;
        }
    }
  }
  res.predicate_winning.resize(P);
  res.observation_winning.resize(K);
  for (int i = 0; i < P; ++i) res.predicate_winning[i] = !p_lost[i];
  for (int j = 0; j < K; ++j) res.observation_winning[j] = !k_lost[j];
  return res;
}

// ---------------------------------------------------------------------------
// Interactive / scripted play.

struct PlayRecord {
  enum class Outcome { SpoilerStuck, DuplicatorStuck, CutoffReachedInfinite, Quit };
  std::vector<std::string> moves;
  Outcome outcome = Outcome::Quit;
};

struct GameOptions {
  std::string role = "watch";  // spoiler | duplicator | watch
  int cutoff = 50;
};

namespace detail {

inline std::string fmt_obs(const std::vector<double>& k) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i) os << ", ";
    os << k[i];
  }
  os << "]";
  return os.str();
}

inline std::optional<std::vector<double>> parse_obs_line(const std::string& body, int n, std::string& err) {
  std::vector<double> k;
  std::string item;
  std::string inner = body;
  auto l = inner.find('[');
  auto r = inner.rfind(']');
  if (l == std::string::npos || r == std::string::npos || r < l) {
    err = "expected k = [v0, v1, ...]";
    return std::nullopt;
  }
  inner = inner.substr(l + 1, r - l - 1);
  std::istringstream is(inner);
  while (std::getline(is, item, ',')) {
    std::string tok;
    for (char ch : item)
      if (!std::isspace(static_cast<unsigned char>(ch))) tok += ch;
    if (tok.empty()) continue;
    try {
      if (tok.find('/') != std::string::npos)
        k.push_back(to_double(parse_rat(tok)));
      else
        k.push_back(std::stod(tok));
    } catch (...) {
      err = "could not parse value '" + tok + "'";
      return std::nullopt;
    }
  }
  if (static_cast<int>(k.size()) != n) {
    err = "need exactly " + std::to_string(n) + " values";
    return std::nullopt;
  }
  return k;
}

inline std::optional<Partition> parse_blocks_line(const std::string& body, int n, std::string& err) {
  std::vector<int> ids(n, -1);
  int block = 0;
  std::size_t pos = 0;
  while ((pos = body.find('{', pos)) != std::string::npos) {
    std::size_t end = body.find('}', pos);
    if (end == std::string::npos) {
      err = "unbalanced block braces";
      return std::nullopt;
    }
    std::istringstream is(body.substr(pos + 1, end - pos - 1));
    std::string item;
    while (std::getline(is, item, ',')) {
      std::string tok;
      for (char ch : item)
        if (!std::isspace(static_cast<unsigned char>(ch))) tok += ch;
      if (tok.empty()) continue;
      int s;
      try {
        s = std::stoi(tok);
      } catch (...) {
        err = "could not parse state '" + tok + "'";
        return std::nullopt;
      }
      if (s < 0 || s >= n || ids[s] != -1) {
        err = "state " + tok + " out of range or repeated";
        return std::nullopt;
      }
      ids[s] = block;
    }
    ++block;
    pos = end + 1;
  }
  for (int s = 0; s < n; ++s)
    if (ids[s] == -1) {
      err = "state " + std::to_string(s) + " not covered by any block";
      return std::nullopt;
    }
  return canonical_partition(ids);
}

}  // namespace detail

// Optimal Spoiler move from a predicate position the Spoiler wins: pick an
// observation legal now and respected by the deepest chain iterate the
// predicate escapes, so Duplicator's rank strictly drops.
inline std::optional<std::vector<double>> spoiler_optimal_move(const SituationConfig& cfg, const Coalgebra& c,
                                                               const FiberElement& P,
                                                               const ChainReport& chain) {
  ModalEvaluator ev(cfg, c);
  int n = c.carrier.size;
  int rank = -1;
  for (std::size_t i = 0; i < chain.iterates.size(); ++i)
    if (!leq(P, chain.iterates[i])) {
      rank = static_cast<int>(i);
      break;
    }
  if (rank < 0) return std::nullopt;  // P below every iterate: Duplicator wins
  const FiberElement& prev = chain.iterates[rank - 1];  // rank >= 1 (top at 0)
  if (cfg.omega == TruthObject::Two) {
    std::vector<double> k(n);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      for (int s = 0; s < n; ++s) k[s] = (mask >> s) & 1u ? 1.0 : 0.0;
      if (leq(prev, observation_pullback(cfg, k)) && spoiler_condition(ev, P, k) >= 0) return k;
    }
    return std::nullopt;
  }
  // Real-valued observation spaces are searched through the logical pool.
  GeneratedSet gen = generate_semantics(cfg, c, static_cast<int>(chain.iterates.size()),
                                        GenerationCaps{800, 12});
  for (const auto& e : gen.entries)
    if (leq(prev, observation_pullback(cfg, e.vec)) && spoiler_condition(ev, P, e.vec) >= 0) return e.vec;
  return std::nullopt;
}

// One game loop over streams; `in` supplies the human's moves when role is
// spoiler or duplicator. Illegal moves are rejected with the failed side
// condition and re-prompted.
inline PlayRecord play_game(const SituationConfig& cfg, const Coalgebra& c, const GameOptions& opts,
                            std::istream& in, std::ostream& out) {
  ModalEvaluator ev(cfg, c);
  int n = c.carrier.size;
  auto [nu, chain] = kleene_gfp(cfg, c);
  std::vector<std::vector<double>> pool;
  if (cfg.fiber == FiberKind::PMet1) {
    out << "note: spoiler observations are restricted to generated logical vectors plus entered ones;\n"
           "winning claims are relative to that restriction being approximating.\n";
    GeneratedSet gen = generate_semantics(cfg, c, 4, GenerationCaps{400, 8});
    for (const auto& e : gen.entries) pool.push_back(e.vec);
  }

  PlayRecord rec;
  GamePosition pos = GamePosition::pred(top(cfg.fiber, c.carrier));
  out << "position: P = top\n";
  for (int round = 0; round < opts.cutoff; ++round) {
    if (!pos.is_observation) {
      // Spoiler to move.
      bool human = opts.role == "spoiler";
      std::optional<std::vector<double>> move;
      if (human) {
        for (;;) {
          out << "spoiler> ";
          std::string line;
          if (!std::getline(in, line)) {
            rec.outcome = PlayRecord::Outcome::Quit;
            return rec;
          }
          if (line.find("quit") != std::string::npos) {
            rec.outcome = PlayRecord::Outcome::Quit;
            return rec;
          }
          if (line.find("hint") != std::string::npos) {
            auto h = spoiler_optimal_move(cfg, c, pos.predicate, chain);
            if (h)
              out << "hint: k = " << detail::fmt_obs(*h) << " (legal and respected by the previous iterate)\n";
            else
              out << "hint: no winning move exists; the predicate is below the gfp\n";
            continue;
          }
          std::string err;
          auto k = detail::parse_obs_line(line, n, err);
          if (!k) {
            out << "rejected: " << err << "\n";
            continue;
          }
          int wit = spoiler_condition(ev, pos.predicate, *k);
          if (wit < 0) {
            out << "rejected: every modality's lifted observation respects the current predicate"
                << " (no lambda with P not below x*(Bk)*tau*Omega-bar)\n";
            continue;
          }
          out << "accepted via modality '" << cfg.modalities[wit].name << "'\n";
          move = *k;
          break;
        }
      } else {
        move = spoiler_optimal_move(cfg, c, pos.predicate, chain);
        if (!move) {
          auto legal = spoiler_moves(cfg, c, pos.predicate, pool);
          if (!legal.empty()) move = legal.front();  // legal but not winning
        }
        if (!move) {
          out << "spoiler is stuck\n";
          rec.outcome = PlayRecord::Outcome::SpoilerStuck;
          return rec;
        }
        out << "spoiler plays k = " << detail::fmt_obs(*move) << "\n";
      }
      rec.moves.push_back("S: k = " + detail::fmt_obs(*move));
      pos = GamePosition::obs(*move);
    } else {
      // Duplicator to move.
      bool human = opts.role == "duplicator";
      std::optional<FiberElement> move;
      if (human) {
        for (;;) {
          out << "duplicator> ";
          std::string line;
          if (!std::getline(in, line)) {
            rec.outcome = PlayRecord::Outcome::Quit;
            return rec;
          }
          if (line.find("quit") != std::string::npos) {
            rec.outcome = PlayRecord::Outcome::Quit;
            return rec;
          }
          if (line.find("hint") != std::string::npos) {
            auto h = duplicator_optimal_move(cfg, pos.observation, nu);
            if (h)
              out << "hint: play the computed bisimilarity (it escapes this observation's kernel)\n";
            else
              out << "hint: no winning response; the observation respects the gfp\n";
            continue;
          }
          std::string err;
          std::optional<FiberElement> p;
          if (cfg.fiber == FiberKind::PMet1) {
            auto k = detail::parse_obs_line(line, n, err);
            if (k) p = observation_pullback(cfg, *k);  // enter a metric via an observation
          } else {
            auto blocks = detail::parse_blocks_line(line, n, err);
            if (blocks) p = FiberElement(*blocks);
          }
          if (!p) {
            out << "rejected: " << err << "\n";
            continue;
          }
          if (leq(*p, observation_pullback(cfg, pos.observation))) {
            out << "rejected: the predicate is below k's kernel (P below k*Omega-bar), so it does not"
                << " challenge k's legitimacy\n";
            continue;
          }
          move = *p;
          break;
        }
      } else {
        move = duplicator_optimal_move(cfg, pos.observation, nu);
        if (!move) {
          // Every legal challenge would already desert the gfp, so playing on
          // only delays the loss.
          bool any_legal = !leq(top(cfg.fiber, c.carrier), observation_pullback(cfg, pos.observation));
          out << (any_legal ? "duplicator concedes: the observation respects the gfp, no challenge can win\n"
                            : "duplicator is stuck: the observation's kernel is total, nothing escapes it\n");
          rec.outcome = PlayRecord::Outcome::DuplicatorStuck;
          return rec;
        }
        out << "duplicator plays the computed bisimilarity\n";
      }
      rec.moves.push_back("D: P");
      pos = GamePosition::pred(*move);
    }
  }
  out << "cutoff reached: infinite play, won by duplicator\n";
  rec.outcome = PlayRecord::Outcome::CutoffReachedInfinite;
  return rec;
}

}  // namespace codense
