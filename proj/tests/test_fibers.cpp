#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "codense/fiber.hpp"

using namespace codense;

namespace {

Partition parts(std::vector<int> ids) { return canonical_partition(ids); }

Metric metric2(double d01) {
  Metric m = Metric::zero(2);
  m.set(0, 1, d01);
  return m;
}

FiberElement random_element(FiberKind kind, int n, std::mt19937_64& rng) {
  switch (kind) {
    case FiberKind::BoolPred: {
      BoolPred b;
      b.member.resize(n);
      for (auto& x : b.member) x = static_cast<char>(rng() % 2);
      return b;
    }
    case FiberKind::EqRel: {
      std::vector<int> ids(n);
      for (auto& x : ids) x = static_cast<int>(rng() % 3);
      return canonical_partition(ids);
    }
    case FiberKind::PMet1: {
      // Shortest-path metric over random edge costs keeps the triangle inequality.
      Metric m = Metric::zero(n);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int s = 0; s < n; ++s)
        for (int t = s + 1; t < n; ++t) m.set(s, t, u(rng));
      for (int k = 0; k < n; ++k)
        for (int s = 0; s < n; ++s)
          for (int t = 0; t < n; ++t)
            m.at(s, t) = std::min(m.at(s, t), m.at(s, k) + m.at(k, t));
      m.validate();
      return m;
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<int> random_map(int n, int m, std::mt19937_64& rng) {
  std::vector<int> f(n);
  for (auto& x : f) x = static_cast<int>(rng() % m);
  return f;
}

}  // namespace

TEST_CASE("top elements") {
  Carrier c3(3), c2(2), c4(4);
  CHECK(std::get<Partition>(top(FiberKind::EqRel, c3)) == parts({0, 0, 0}));
  CHECK(std::get<Metric>(top(FiberKind::PMet1, c2)) == Metric::zero(2));
  CHECK(std::get<BoolPred>(top(FiberKind::BoolPred, c4)).member == std::vector<char>({1, 1, 1, 1}));
}

TEST_CASE("leq on partitions and metrics") {
  // discrete refines total
  CHECK(leq(parts({0, 1}), parts({0, 0})));
  CHECK_FALSE(leq(parts({0, 0}), parts({0, 1})));
  // larger distances are below in the reversed order
  CHECK(leq(metric2(1.0), metric2(0.0)));
  CHECK_FALSE(leq(metric2(0.0), metric2(1.0)));
  CHECK_THROWS(leq(FiberElement(parts({0, 1})), FiberElement(metric2(0.5))));
}

TEST_CASE("meet: common refinement, pointwise max, idempotence") {
  CHECK(std::get<Partition>(meet(parts({0, 0, 1}), parts({0, 1, 1}))) == parts({0, 1, 2}));
  CHECK(std::get<Metric>(meet(metric2(0.3), metric2(0.7))) == metric2(0.7));
  Metric d = metric2(0.42);
  CHECK(std::get<Metric>(meet(FiberElement(d), FiberElement(d))) == d);
}

TEST_CASE("meet of metrics is the greatest lower bound") {
  // Pointwise-smallest pseudometric that is >= both operands.
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    FiberElement a = random_element(FiberKind::PMet1, 4, rng);
    FiberElement b = random_element(FiberKind::PMet1, 4, rng);
    FiberElement m = meet(a, b);
    std::get<Metric>(m).validate();
    CHECK(leq(m, a));
    CHECK(leq(m, b));
    // any sampled lower bound is below the meet
    FiberElement l = random_element(FiberKind::PMet1, 4, rng);
    if (leq(l, a) && leq(l, b)) CHECK(leq(l, m));
  }
}

TEST_CASE("pullback: preimage, relation kernel, induced metric") {
  // constant map collapses everything
  std::vector<int> cst = {1, 1, 1};
  CHECK(std::get<Partition>(pullback(cst, FiberElement(parts({0, 1})))) == parts({0, 0, 0}));
  // identity leaves elements unchanged
  std::vector<int> idm = {0, 1};
  CHECK(std::get<Metric>(pullback(idm, FiberElement(metric2(0.5)))) == metric2(0.5));
  // f = {0 -> a, 1 -> a, 2 -> b}, d(a,b) = 0.4
  std::vector<int> f = {0, 0, 1};
  Metric pulled = std::get<Metric>(pullback(f, FiberElement(metric2(0.4))));
  CHECK(pulled.at(0, 1) == 0.0);
  CHECK(pulled.at(0, 2) == 0.4);
  // preimage of a predicate
  BoolPred q;
  q.member = {1, 0};
  CHECK(std::get<BoolPred>(pullback(f, FiberElement(q))).member == std::vector<char>({1, 1, 0}));
  std::vector<int> bad = {0, 5};
  CHECK_THROWS(pullback(bad, FiberElement(metric2(0.4))));
}

TEST_CASE("reindexing preserves meets and composes") {
  std::mt19937_64 rng(11);
  for (FiberKind kind : {FiberKind::BoolPred, FiberKind::EqRel, FiberKind::PMet1}) {
    for (int trial = 0; trial < 25; ++trial) {
      int nx = 3 + static_cast<int>(rng() % 3);
      int ny = 2 + static_cast<int>(rng() % 3);
      int nz = 2 + static_cast<int>(rng() % 3);
      auto f = random_map(nx, ny, rng);
      auto g = random_map(ny, nz, rng);
      std::vector<FiberElement> qs;
      for (int i = 0; i < 3; ++i) qs.push_back(random_element(kind, ny, rng));

      FiberElement lhs = pullback(f, meet(qs));
      std::vector<FiberElement> pulled;
      for (const auto& q : qs) pulled.push_back(pullback(f, q));
      CHECK(fiber_equal(lhs, meet(pulled)));

      FiberElement qz = random_element(kind, nz, rng);
      std::vector<int> gf(nx);
      for (int s = 0; s < nx; ++s) gf[s] = g[f[s]];
      CHECK(fiber_equal(pullback(gf, qz), pullback(f, pullback(g, qz))));
    }
  }
}

TEST_CASE("leq is a partial order on canonical forms") {
  std::mt19937_64 rng(13);
  for (FiberKind kind : {FiberKind::BoolPred, FiberKind::EqRel, FiberKind::PMet1}) {
    for (int trial = 0; trial < 20; ++trial) {
      FiberElement a = random_element(kind, 4, rng);
      FiberElement b = random_element(kind, 4, rng);
      FiberElement c = random_element(kind, 4, rng);
      CHECK(leq(a, a));
      if (leq(a, b) && leq(b, c)) CHECK(leq(a, c));
      FiberElement m = meet(a, b);
      CHECK(leq(m, a));
      CHECK(leq(m, b));
      if (leq(c, a) && leq(c, b)) CHECK(leq(c, m));
    }
  }
}

TEST_CASE("metric invariants hold after operations") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    FiberElement a = random_element(FiberKind::PMet1, 5, rng);
    FiberElement b = random_element(FiberKind::PMet1, 5, rng);
    std::get<Metric>(meet(a, b)).validate();
    auto f = random_map(3, 5, rng);
    std::get<Metric>(pullback(f, a)).validate();
  }
}

TEST_CASE("carrier validation") {
  CHECK_THROWS(Carrier(0));
  CHECK_THROWS(Carrier({"a", "a"}));
  Carrier c({"x", "y"});
  CHECK(c.index_of("y") == 1);
  CHECK(c.index_of("z") == -1);
}
