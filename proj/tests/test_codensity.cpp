#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "codense/codensity.hpp"
#include "codense/fuzz.hpp"

using namespace codense;

namespace {

std::vector<std::pair<int, Rat>> dirac(int s) { return {{s, rat(1)}}; }

Metric metric2(double d01) {
  Metric m = Metric::zero(2);
  m.set(0, 1, d01);
  return m;
}

// Independent fine-grid maximization of |E_xi f - E_xi' f| over nonexpansive
// grid-valued f, for carriers of size <= 3.
double kantorovich_grid_oracle(const Metric& d, const std::vector<std::pair<int, Rat>>& xi,
                               const std::vector<std::pair<int, Rat>>& xi2, int den) {
  int n = d.n;
  REQUIRE(n <= 3);
  std::vector<double> f(n, 0.0);
  double best = 0.0;
  auto rec = [&](auto&& self, int i) -> void {
    if (i == n) {
      double acc = 0;
      for (const auto& [s, w] : xi) acc += f[s] * to_double(w);
      for (const auto& [s, w] : xi2) acc -= f[s] * to_double(w);
      best = std::max(best, std::abs(acc));
      return;
    }
    for (int g = 0; g <= den; ++g) {
      f[i] = static_cast<double>(g) / den;
      bool ok = true;
      for (int j = 0; j < i; ++j)
        if (std::abs(f[i] - f[j]) > d.at(i, j) + 1e-12) ok = false;
      if (ok) self(self, i + 1);
    }
  };
  rec(rec, 0);
  return best;
}

Metric random_metric(int n, std::mt19937_64& rng) {
  Metric m = Metric::zero(n);
  std::uniform_int_distribution<int> u(0, 16);
  for (int s = 0; s < n; ++s)
    for (int t = s + 1; t < n; ++t) m.set(s, t, u(rng) / 16.0);
  for (int k = 0; k < n; ++k)
    for (int s = 0; s < n; ++s)
      for (int t = 0; t < n; ++t) m.at(s, t) = std::min(m.at(s, t), m.at(s, k) + m.at(k, t));
  return m;
}

}  // namespace

TEST_CASE("kantorovich: base cases") {
  Metric d = metric2(1.0);
  CHECK(kantorovich(d, dirac(0), dirac(0)) == Catch::Approx(0.0).margin(1e-9));
  CHECK(kantorovich(d, dirac(0), dirac(1)) == Catch::Approx(1.0).margin(1e-9));
  Metric d3 = metric2(0.3);
  CHECK(kantorovich(d3, dirac(0), dirac(1)) == Catch::Approx(0.3).margin(1e-9));
  // mass defect: delta_u with mass 1 vs half delta_u; f == 1 attains 1/2
  CHECK(kantorovich(d3, dirac(0), {{0, rat(1, 2)}}) == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("kantorovich agrees with a fine-grid oracle on random instances") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 2 + static_cast<int>(rng() % 2);
    Metric d = random_metric(n, rng);
    auto draw = [&]() {
      std::vector<std::pair<int, Rat>> xi;
      int budget = 8;
      int count = 1 + static_cast<int>(rng() % n);
      for (int i = 0; i < count && budget > 0; ++i) {
        int w = 1 + static_cast<int>(rng() % budget);
        budget -= w;
        xi.emplace_back(static_cast<int>(rng() % n), rat(w, 8));
      }
      return xi;
    };
    auto xi = draw(), xi2 = draw();
    double lp = kantorovich(d, xi, xi2);
    double oracle = kantorovich_grid_oracle(d, xi, xi2, 32);
    CHECK(lp >= oracle - 1e-9);       // the oracle restricts the sup to grid values
    CHECK(lp <= oracle + 2.0 / 32.0);  // and is 2*delta-close to it
  }
}

TEST_CASE("hausdorff closed form and conventions") {
  Metric d = metric2(1.0);
  CHECK(hausdorff(d, {}, {}) == 0.0);
  CHECK(hausdorff(d, {}, {0}) == 1.0);
  CHECK(hausdorff(d, {0}, {0, 1}) == 1.0);
  Metric d3 = metric2(0.3);
  CHECK(hausdorff(d3, {0}, {1}) == Catch::Approx(0.3));
  CHECK(hausdorff(d3, {0, 1}, {0, 1}) == 0.0);
}

TEST_CASE("pmet lift: zero metric maps to zero on equal-mass chains") {
  // With d = 0 only constant observations are nonexpansive, and constants
  // separate nothing once total masses agree.
  Coalgebra c;
  c.carrier = Carrier(3);
  c.functor = FunctorSpec::dist(FunctorSpec::id());
  c.next = {BehaviorValue::dist({BehaviorValue::state(1)}, {rat(1)}),
            BehaviorValue::dist({BehaviorValue::state(0), BehaviorValue::state(2)}, {rat(1, 2), rat(1, 2)}),
            BehaviorValue::dist({BehaviorValue::state(2)}, {rat(1)})};
  c.validate();
  SituationConfig cfg = kmm_config(c.functor);
  Metric zero = Metric::zero(c.carrier.size);
  Metric lifted = lift_step_pmet(cfg, c, zero);
  CHECK(lifted == zero);

  // On unequal masses the constant 1 observation separates: |1*1 - 1*(1/2)|.
  Coalgebra c2;
  c2.carrier = Carrier(2);
  c2.functor = c.functor;
  c2.next = {BehaviorValue::dist({BehaviorValue::state(0)}, {rat(1)}),
             BehaviorValue::dist({BehaviorValue::state(0)}, {rat(1, 2)})};
  c2.validate();
  CHECK(lift_step_pmet(cfg, c2, Metric::zero(2)).at(0, 1) == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("pmet lift: dirac behaviors recover the input metric") {
  Coalgebra c;
  c.carrier = Carrier(2);
  c.functor = FunctorSpec::dist(FunctorSpec::id());
  c.next = {BehaviorValue::dist({BehaviorValue::state(0)}, {rat(1)}),
            BehaviorValue::dist({BehaviorValue::state(1)}, {rat(1)})};
  c.validate();
  SituationConfig cfg = kmm_config(c.functor);
  Metric d = metric2(0.3);
  CHECK(lift_step_pmet(cfg, c, d).at(0, 1) == Catch::Approx(0.3).margin(1e-9));
}

TEST_CASE("pmet lift output satisfies the metric invariants") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 15; ++trial) {
    Coalgebra c = fuzz::random_markov(rng, 5);
    SituationConfig cfg = kmm_config(c.functor);
    Metric d = random_metric(c.carrier.size, rng);
    Metric lifted = lift_step_pmet(cfg, c, d);
    CHECK_NOTHROW(lifted.validate());
  }
}

TEST_CASE("pmet lift is monotone") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 15; ++trial) {
    Coalgebra c = fuzz::random_markov(rng, 4);
    SituationConfig cfg = kmm_config(c.functor);
    Metric d1 = random_metric(c.carrier.size, rng);
    Metric d2 = random_metric(c.carrier.size, rng);
    // force d1 sqleq d2 (d1 >= d2 pointwise) by meeting
    Metric lo = std::get<Metric>(meet(FiberElement(d1), FiberElement(d2)));
    CHECK(leq(FiberElement(lift_step_pmet(cfg, c, lo)), FiberElement(lift_step_pmet(cfg, c, d2))));
  }
}

TEST_CASE("exact pmet lift vs grid oracle within 2 delta") {
  std::mt19937_64 rng(51);
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Coalgebra c = trial % 2 == 0 ? fuzz::random_markov(rng, 4, 8, Rat(1)) : fuzz::random_kripke(rng, 4);
    SituationConfig cfg = kmm_config(c.functor);
    Metric d = random_metric(c.carrier.size, rng);
    Metric exact = lift_step_pmet(cfg, c, d);
    const int den = 16;
    for (int s = 0; s < c.carrier.size; ++s)
      for (int t = s + 1; t < c.carrier.size; ++t) {
        double o = 0.0;
        for (std::size_t mi = 0; mi < cfg.modalities.size(); ++mi)
          o = std::max(o, grid_oracle_lift(cfg, c, d, static_cast<int>(mi), s, t, den));
        CHECK(exact.at(s, t) >= o - 1e-9);
        CHECK(exact.at(s, t) <= o + 2.0 / den);
        ++checked;
      }
  }
  CHECK(checked > 10);
}

TEST_CASE("eqrel lift: diamond separates a live state from a deadlock") {
  // s0 -> {s1}, s1 -> {} under the total relation
  Coalgebra c;
  c.carrier = Carrier(2);
  c.functor = FunctorSpec::pow(FunctorSpec::id());
  c.next = {BehaviorValue::set({BehaviorValue::state(1)}), BehaviorValue::set({})};
  c.validate();
  SituationConfig cfg;
  cfg.fiber = FiberKind::EqRel;
  cfg.omega = TruthObject::Two;
  cfg.functor = c.functor;
  cfg.connectives = cfkp_connectives();
  cfg.modalities = {make_modality("dia", {}, LeafEval::Diamond)};
  cfg.validate();
  Partition total = std::get<Partition>(top(FiberKind::EqRel, c.carrier));
  Partition lifted = lift_step_eqrel(cfg, c, total);
  CHECK(lifted.num_blocks == 2);
}

TEST_CASE("eqrel lift: isomorphic one-step behavior stays total") {
  // deterministic 3-cycle as diracs
  Coalgebra c;
  c.carrier = Carrier(3);
  c.functor = FunctorSpec::dist(FunctorSpec::id());
  c.next = {BehaviorValue::dist({BehaviorValue::state(1)}, {rat(1)}),
            BehaviorValue::dist({BehaviorValue::state(2)}, {rat(1)}),
            BehaviorValue::dist({BehaviorValue::state(0)}, {rat(1)})};
  c.validate();
  SituationConfig cfg;
  cfg.fiber = FiberKind::EqRel;
  cfg.omega = TruthObject::Two;
  cfg.functor = c.functor;
  cfg.connectives = cfkp_connectives();
  ModalityDef thr = make_modality("t:1/2", {}, LeafEval::Threshold);
  thr.threshold = rat(1, 2);
  cfg.modalities = {thr};
  cfg.validate();
  Partition total = std::get<Partition>(top(FiberKind::EqRel, c.carrier));
  CHECK(lift_step_eqrel(cfg, c, total) == total);
}

TEST_CASE("eqrel lift is monotone in the input relation") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    Coalgebra c = fuzz::random_lmp(rng, 5, 2, 8);
    SituationConfig cfg = cfkp_config(c.functor, fuzz::grid_thresholds(4));
    int n = c.carrier.size;
    std::vector<int> ids1(n), ids2(n);
    for (int s = 0; s < n; ++s) ids1[s] = static_cast<int>(rng() % 3);
    // coarsen ids1 to get R' with R sqleq R'
    for (int s = 0; s < n; ++s) ids2[s] = ids1[s] == 2 ? 1 : ids1[s];
    Partition r1 = canonical_partition(ids1), r2 = canonical_partition(ids2);
    REQUIRE(leq(FiberElement(r1), FiberElement(r2)));
    CHECK(leq(FiberElement(lift_step_eqrel(cfg, c, r1)), FiberElement(lift_step_eqrel(cfg, c, r2))));
  }
}

TEST_CASE("eqrel lift refuses oversized block counts") {
  std::mt19937_64 rng(71);
  Coalgebra c = fuzz::random_lmp(rng, 4, 1, 8);
  SituationConfig cfg = cfkp_config(c.functor, {rat(1, 2)});
  Partition p = std::get<Partition>(top(FiberKind::EqRel, c.carrier));
  p.num_blocks = 21;  // simulate an oversized partition
  p.block.assign(c.carrier.size, 0);
  CHECK_THROWS_AS(lift_step_eqrel(cfg, c, p), refusal_error);
}

TEST_CASE("grid oracle: one-state carrier is exhaustive") {
  Coalgebra c;
  c.carrier = Carrier(1);
  c.functor = FunctorSpec::dist(FunctorSpec::id());
  c.next = {BehaviorValue::dist({BehaviorValue::state(0)}, {rat(1, 2)})};
  c.validate();
  SituationConfig cfg = kmm_config(c.functor);
  Metric d = Metric::zero(1);
  CHECK(grid_oracle_lift(cfg, c, d, 0, 0, 0, 2) == 0.0);
}

TEST_CASE("lp determinism under state relabeling") {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 25; ++trial) {
    int n = 4;
    Metric d = random_metric(n, rng);
    std::vector<std::pair<int, Rat>> xi, xi2;
    int b1 = 8, b2 = 8;
    for (int i = 0; i < 3 && b1 > 0; ++i) {
      int w = 1 + static_cast<int>(rng() % b1);
      b1 -= w;
      xi.emplace_back(static_cast<int>(rng() % n), rat(w, 8));
    }
    for (int i = 0; i < 3 && b2 > 0; ++i) {
      int w = 1 + static_cast<int>(rng() % b2);
      b2 -= w;
      xi2.emplace_back(static_cast<int>(rng() % n), rat(w, 8));
    }
    // permute states
    std::vector<int> perm = {2, 0, 3, 1};
    Metric dp = Metric::zero(n);
    for (int s = 0; s < n; ++s)
      for (int t = 0; t < n; ++t) dp.at(perm[s], perm[t]) = d.at(s, t);
    auto permute = [&](std::vector<std::pair<int, Rat>> v) {
      for (auto& [s, w] : v) s = perm[s];
      return v;
    };
    double v1 = kantorovich(d, xi, xi2);
    double v2 = kantorovich(dp, permute(xi), permute(xi2));
    CHECK(std::abs(v1 - v2) <= 1e-9);
  }
}
