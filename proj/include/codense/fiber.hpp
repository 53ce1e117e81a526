#pragma once

// The three concrete fibers over a finite carrier: Boolean predicates,
// equivalence relations (stored as canonical partitions), and 1-bounded
// pseudometrics. Operations: top, leq, meet, pullback. For pseudometrics the
// fiber order is reversed (d sqleq e iff d >= e pointwise), so top is the
// zero metric and meet is pointwise max.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "codense/carrier.hpp"

namespace codense {

inline constexpr double kMetricTol = 1e-9;

enum class FiberKind { BoolPred, EqRel, PMet1 };

inline const char* fiber_kind_name(FiberKind k) {
  switch (k) {
    case FiberKind::BoolPred: return "boolpred";
    case FiberKind::EqRel: return "eqrel";
    case FiberKind::PMet1: return "pmet1";
  }
  return "?";
}

struct BoolPred {
  std::vector<char> member;  // one flag per state

  int size() const { return static_cast<int>(member.size()); }
  bool operator==(const BoolPred& o) const { return member == o.member; }
};

// Canonical form: block ids are assigned by first occurrence, so state 0 is
// always in block 0 and equal partitions are structurally equal.
struct Partition {
  std::vector<int> block;
  int num_blocks = 0;

  int size() const { return static_cast<int>(block.size()); }
  bool same_block(int s, int t) const { return block[s] == block[t]; }
  bool operator==(const Partition& o) const { return block == o.block; }

  std::vector<std::vector<int>> blocks() const {
    std::vector<std::vector<int>> out(num_blocks);
    for (int s = 0; s < size(); ++s) out[block[s]].push_back(s);
    return out;
  }
};

inline Partition canonical_partition(std::span<const int> raw_ids) {
  Partition p;
  p.block.resize(raw_ids.size());
  std::map<int, int> rename;
  for (std::size_t s = 0; s < raw_ids.size(); ++s) {
    auto [it, fresh] = rename.emplace(raw_ids[s], p.num_blocks);
    if (fresh) ++p.num_blocks;
    p.block[s] = it->second;
  }
  return p;
}

// Partition from arbitrary per-state keys (states with equal keys share a block).
template <typename Key>
Partition partition_by_key(const std::vector<Key>& keys) {
  std::map<Key, int> rename;
  std::vector<int> raw(keys.size());
  int next = 0;
  for (std::size_t s = 0; s < keys.size(); ++s) {
    auto [it, fresh] = rename.emplace(keys[s], next);
    if (fresh) ++next;
    raw[s] = it->second;
  }
  return canonical_partition(raw);
}

struct Metric {
  int n = 0;
  std::vector<double> d;  // row-major n*n, symmetric, zero diagonal

  double at(int s, int t) const { return d[static_cast<std::size_t>(s) * n + t]; }
  double& at(int s, int t) { return d[static_cast<std::size_t>(s) * n + t]; }

  static Metric zero(int n) {
    Metric m;
    m.n = n;
    m.d.assign(static_cast<std::size_t>(n) * n, 0.0);
    return m;
  }

  void set(int s, int t, double v) {
    at(s, t) = v;
    at(t, s) = v;
  }

  // Symmetry, zero diagonal, range and the triangle inequality, all within tol.
  void validate(double tol = kMetricTol) const {
    if (static_cast<int>(d.size()) != n * n) throw std::invalid_argument("metric: bad dimensions");
    for (int s = 0; s < n; ++s) {
      if (std::abs(at(s, s)) > tol) throw std::invalid_argument("metric: nonzero diagonal");
      for (int t = 0; t < n; ++t) {
        double v = at(s, t);
        if (!(v >= -tol && v <= 1.0 + tol)) throw std::invalid_argument("metric: entry outside [0,1]");
        if (std::abs(v - at(t, s)) > tol) throw std::invalid_argument("metric: not symmetric");
        for (int u = 0; u < n; ++u)
          if (v > at(s, u) + at(u, t) + tol) throw std::invalid_argument("metric: triangle inequality violated");
      }
    }
  }

  bool operator==(const Metric& o) const { return n == o.n && d == o.d; }
};

using FiberElement = std::variant<BoolPred, Partition, Metric>;

inline FiberKind kind_of(const FiberElement& e) {
  if (std::holds_alternative<BoolPred>(e)) return FiberKind::BoolPred;
  if (std::holds_alternative<Partition>(e)) return FiberKind::EqRel;
  return FiberKind::PMet1;
}

inline int carrier_size_of(const FiberElement& e) {
  if (auto* b = std::get_if<BoolPred>(&e)) return b->size();
  if (auto* p = std::get_if<Partition>(&e)) return p->size();
  return std::get<Metric>(e).n;
}

inline void require_compatible(const FiberElement& a, const FiberElement& b) {
  if (kind_of(a) != kind_of(b)) throw std::invalid_argument("fiber kind mismatch");
  if (carrier_size_of(a) != carrier_size_of(b)) throw std::invalid_argument("fiber carrier mismatch");
}

// The sqleq-greatest element: full predicate, total relation, zero metric.
inline FiberElement top(FiberKind kind, const Carrier& carrier) {
  switch (kind) {
    case FiberKind::BoolPred: return BoolPred{std::vector<char>(carrier.size, 1)};
    case FiberKind::EqRel: return canonical_partition(std::vector<int>(carrier.size, 0));
    case FiberKind::PMet1: return Metric::zero(carrier.size);
  }
  throw std::logic_error("unreachable");
}

inline FiberElement bottom(FiberKind kind, const Carrier& carrier) {
  switch (kind) {
    case FiberKind::BoolPred: return BoolPred{std::vector<char>(carrier.size, 0)};
    case FiberKind::EqRel: {
      std::vector<int> ids(carrier.size);
      for (int s = 0; s < carrier.size; ++s) ids[s] = s;
      return canonical_partition(ids);
    }
    case FiberKind::PMet1: {
      Metric m = Metric::zero(carrier.size);
      for (int s = 0; s < m.n; ++s)
        for (int t = 0; t < m.n; ++t)
          if (s != t) m.at(s, t) = 1.0;
      return m;
    }
  }
  throw std::logic_error("unreachable");
}

inline bool leq(const FiberElement& P, const FiberElement& Q) {
  require_compatible(P, Q);
  if (auto* p = std::get_if<BoolPred>(&P)) {
    const auto& q = std::get<BoolPred>(Q);
    for (int s = 0; s < p->size(); ++s)
      if (p->member[s] && !q.member[s]) return false;
    return true;
  }
  if (auto* p = std::get_if<Partition>(&P)) {
    // P refines Q: each P-block lies inside one Q-block.
    const auto& q = std::get<Partition>(Q);
    std::vector<int> image(p->num_blocks, -1);
    for (int s = 0; s < p->size(); ++s) {
      int& img = image[p->block[s]];
      if (img == -1)
        img = q.block[s];
      else if (img != q.block[s])
        return false;
    }
    return true;
  }
  const auto& p = std::get<Metric>(P);
  const auto& q = std::get<Metric>(Q);
  for (std::size_t i = 0; i < p.d.size(); ++i)
    if (p.d[i] < q.d[i] - kMetricTol) return false;
  return true;
}

inline bool fiber_equal(const FiberElement& a, const FiberElement& b) { return leq(a, b) && leq(b, a); }

inline FiberElement meet(std::span<const FiberElement> family) {
  if (family.empty()) throw std::invalid_argument("meet of empty family (use top)");
  for (const auto& e : family) require_compatible(family[0], e);
  if (std::holds_alternative<BoolPred>(family[0])) {
    BoolPred out = std::get<BoolPred>(family[0]);
    for (const auto& e : family.subspan(1)) {
      const auto& b = std::get<BoolPred>(e);
      for (int s = 0; s < out.size(); ++s) out.member[s] = out.member[s] && b.member[s];
    }
    return out;
  }
  if (std::holds_alternative<Partition>(family[0])) {
    // Common refinement: states share a block iff they do in every member.
    std::vector<std::vector<int>> keys(carrier_size_of(family[0]));
    for (const auto& e : family) {
      const auto& p = std::get<Partition>(e);
      for (int s = 0; s < p.size(); ++s) keys[s].push_back(p.block[s]);
    }
    return partition_by_key(keys);
  }
  Metric out = std::get<Metric>(family[0]);
  for (const auto& e : family.subspan(1)) {
    const auto& m = std::get<Metric>(e);
    for (std::size_t i = 0; i < out.d.size(); ++i) out.d[i] = std::max(out.d[i], m.d[i]);
  }
  return out;
}

inline FiberElement meet(const FiberElement& a, const FiberElement& b) {
  FiberElement fam[2] = {a, b};
  return meet(std::span<const FiberElement>(fam, 2));
}

// Reindexing along a total map f: X -> Y given as f[s] in [0, carrier of Q).
inline FiberElement pullback(std::span<const int> f, const FiberElement& Q) {
  int m = carrier_size_of(Q);
  for (int y : f)
    if (y < 0 || y >= m) throw std::invalid_argument("pullback: map lands outside target carrier");
  if (auto* q = std::get_if<BoolPred>(&Q)) {
    BoolPred out;
    out.member.resize(f.size());
    for (std::size_t s = 0; s < f.size(); ++s) out.member[s] = q->member[f[s]];
    return out;
  }
  if (auto* q = std::get_if<Partition>(&Q)) {
    std::vector<int> raw(f.size());
    for (std::size_t s = 0; s < f.size(); ++s) raw[s] = q->block[f[s]];
    return canonical_partition(raw);
  }
  const auto& q = std::get<Metric>(Q);
  Metric out = Metric::zero(static_cast<int>(f.size()));
  for (int s = 0; s < out.n; ++s)
    for (int t = 0; t < out.n; ++t) out.at(s, t) = q.at(f[s], f[t]);
  return out;
}

// Kernel of an observation vector: the pullback of the equality predicate.
inline Partition kernel_partition_exact(const std::vector<double>& v) { return partition_by_key(v); }

// Kernel with tolerance: states are merged when joined by a chain of
// pairwise-close values across all listed vectors.
inline Partition kernel_partition_tol(const std::vector<std::vector<double>>& vectors, int n, double tol) {
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int s = 0; s < n; ++s)
    for (int t = s + 1; t < n; ++t) {
      bool close = true;
      for (const auto& v : vectors)
        if (std::abs(v[s] - v[t]) > tol) {
          close = false;
          break;
        }
      if (close) parent[std::max(find(s), find(t))] = std::min(find(s), find(t));
    }
  std::vector<int> raw(n);
  for (int s = 0; s < n; ++s) raw[s] = find(s);
  return canonical_partition(raw);
}

inline std::string partition_to_string(const Partition& p, const Carrier& carrier) {
  std::string out;
  for (const auto& blk : p.blocks()) {
    out += "{";
    for (std::size_t i = 0; i < blk.size(); ++i) {
      if (i) out += ",";
      out += carrier.name(blk[i]);
    }
    out += "}";
  }
  return out;
}

}  // namespace codense
