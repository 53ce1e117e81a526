#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "codense/logic.hpp"

using namespace codense;

namespace {

BehaviorValue dist_states(std::vector<std::pair<int, Rat>> entries) {
  std::vector<BehaviorValue> support;
  std::vector<Rat> ws;
  for (auto& [s, w] : entries) {
    support.push_back(BehaviorValue::state(s));
    ws.push_back(w);
  }
  return BehaviorValue::dist(std::move(support), std::move(ws));
}

// Two-state LMP over one label: s0 moves to s1 with mass 1/3, s1 moves to s0
// with mass 2/3.
Coalgebra lmp_third_twothirds() {
  Coalgebra c;
  c.carrier = Carrier(2);
  c.functor = FunctorSpec::exponent(FunctorSpec::dist(FunctorSpec::id()), {"a"});
  c.next = {BehaviorValue::tuple({dist_states({{1, rat(1, 3)}})}),
            BehaviorValue::tuple({dist_states({{0, rat(2, 3)}})})};
  c.validate();
  return c;
}

Coalgebra markov_mass_one() {
  Coalgebra c;
  c.carrier = Carrier(3);
  c.functor = FunctorSpec::dist(FunctorSpec::id());
  c.next = {dist_states({{1, rat(1, 2)}, {2, rat(1, 2)}}), dist_states({{2, rat(1, 1)}}),
            dist_states({{0, rat(1, 4)}, {1, rat(3, 4)}})};
  c.validate();
  return c;
}

}  // namespace

TEST_CASE("depth") {
  Coalgebra c = markov_mass_one();
  SituationConfig cfg = kmm_config(c.functor);
  FormulaRef top = parse_formula(cfg, "T");
  CHECK(depth(top) == 0);
  CHECK(depth(parse_formula(cfg, "dia[E](dia[E](T))")) == 2);
  CHECK(depth(parse_formula(cfg, "min(T, dia[E](T))")) == 1);
}

TEST_CASE("formula parse/print round trip and errors") {
  Coalgebra c = lmp_third_twothirds();
  SituationConfig kmm = kmm_config(c.functor);
  for (const char* text : {"T", "neg(T)", "minus(3/8,T)", "min(T,neg(T))", "dia[E_a](minus(1/8,T))"}) {
    FormulaRef f = parse_formula(kmm, text);
    CHECK(print_formula(f, kmm) == text);
  }
  CHECK_NOTHROW(parse_formula(kmm, "  min ( T ,\n neg(T) ) "));
  CHECK_THROWS(parse_formula(kmm, "minus(1/3,T)"));  // off the q-grid
  CHECK_THROWS(parse_formula(kmm, "and(T,T)"));      // not a kmm connective
  CHECK_THROWS(parse_formula(kmm, "dia[nosuch](T)"));
  CHECK_THROWS(parse_formula(kmm, "min(T)"));
}

TEST_CASE("semantics: constants and modal clauses") {
  Coalgebra c = markov_mass_one();
  SituationConfig cfg = kmm_config(c.functor);
  auto ones = eval_formula(parse_formula(cfg, "T"), c, cfg);
  CHECK(ones == std::vector<double>{1.0, 1.0, 1.0});
  // expected value of the constant 1 under mass-1 distributions
  auto ev1 = eval_formula(parse_formula(cfg, "dia[E](T)"), c, cfg);
  CHECK(ev1 == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("semantics: threshold modality at exact mass") {
  Coalgebra c;
  c.carrier = Carrier(2);
  c.functor = FunctorSpec::exponent(FunctorSpec::dist(FunctorSpec::id()), {"a"});
  c.next = {BehaviorValue::tuple({dist_states({{1, rat(1, 2)}})}),
            BehaviorValue::tuple({dist_states({{0, rat(3, 4)}})})};
  c.validate();
  SituationConfig cfg = cfkp_config(c.functor, {rat(1, 2)});
  auto v = eval_formula(parse_formula(cfg, "dia[a:1/2](T)"), c, cfg);
  CHECK(v == std::vector<double>{0.0, 1.0});  // mass exactly 1/2 is below the strict threshold
}

TEST_CASE("generation: cfkp level 0 is just the unit") {
  Coalgebra c = lmp_third_twothirds();
  SituationConfig cfg = cfkp_config(c.functor, {rat(1, 3)});
  GeneratedSet g = generate_semantics(cfg, c, 0);
  REQUIRE(g.entries.size() == 1);
  CHECK(g.entries[0].vec == std::vector<double>{1.0, 1.0});
  CHECK_FALSE(g.truncated);
}

TEST_CASE("generation: kmm level 0 constants for q-grid {0,1/2,1}") {
  Coalgebra c = markov_mass_one();
  SituationConfig cfg = kmm_config(c.functor, {}, 2);
  GeneratedSet g = generate_semantics(cfg, c, 0);
  std::set<double> constants;
  for (const auto& e : g.entries) {
    CHECK(e.vec[0] == e.vec[1]);
    constants.insert(e.vec[0]);
  }
  CHECK(constants == std::set<double>{0.0, 0.5, 1.0});
}

TEST_CASE("generation: bu level 0 matches a brute-force closure oracle") {
  Coalgebra c = markov_mass_one();
  std::vector<Rat> grid = {rat(-1), rat(0), rat(1), rat(2)};
  SituationConfig cfg = bu_config(c.functor, {}, grid);
  GeneratedSet g = generate_semantics(cfg, c, 0);

  // Oracle: close {1} under min, r+, r* with clamping into [-2,2].
  auto clamp = [](double x) { return std::min(2.0, std::max(-2.0, x)); };
  std::set<double> oracle = {1.0};
  for (bool grew = true; grew;) {
    grew = false;
    std::set<double> next = oracle;
    for (double a : oracle) {
      for (const Rat& r : grid) {
        next.insert(clamp(to_double(r) + a));
        next.insert(clamp(to_double(r) * a));
      }
      for (double b : oracle) next.insert(std::min(a, b));
    }
    if (next != oracle) {
      oracle = next;
      grew = true;
    }
  }
  std::set<double> got;
  for (const auto& e : g.entries) {
    CHECK(e.vec[0] == e.vec[1]);
    got.insert(e.vec[0]);
  }
  CHECK(got == oracle);
}

TEST_CASE("generation: determinism and level monotonicity") {
  Coalgebra c = lmp_third_twothirds();
  SituationConfig cfg = cfkp_config(c.functor, {rat(0), rat(1, 3), rat(2, 3)});
  GeneratedSet g1 = generate_semantics(cfg, c, 3);
  GeneratedSet g2 = generate_semantics(cfg, c, 3);
  REQUIRE(g1.entries.size() == g2.entries.size());
  for (std::size_t i = 0; i < g1.entries.size(); ++i) {
    CHECK(g1.entries[i].vec == g2.entries[i].vec);
    CHECK(print_formula(g1.entries[i].formula, cfg) == print_formula(g2.entries[i].formula, cfg));
  }
}

TEST_CASE("generation: caps mark truncation and keep the partial set") {
  Coalgebra c = markov_mass_one();
  SituationConfig cfg = kmm_config(c.functor);
  GenerationCaps caps{5, 2};
  GeneratedSet g = generate_semantics(cfg, c, 1, caps);
  CHECK(g.truncated);
  CHECK(g.entries.size() >= 5);
}

TEST_CASE("logical predicate: symmetric states stay together at every depth") {
  // Two states with literally identical behavior trees.
  Coalgebra c;
  c.carrier = Carrier(3);
  c.functor = FunctorSpec::dist(FunctorSpec::id());
  c.next = {dist_states({{2, rat(1, 2)}}), dist_states({{2, rat(1, 2)}}), dist_states({{2, rat(1, 4)}})};
  c.validate();
  SituationConfig cfg = kmm_config(c.functor);
  for (int n = 0; n <= 3; ++n) {
    auto lp = logical_predicate(cfg, c, n);
    CHECK(std::get<Metric>(lp.element).at(0, 1) == 0.0);
  }
}

TEST_CASE("logical predicate: cfkp separates 1/3 vs 2/3 at depth 1") {
  Coalgebra c = lmp_third_twothirds();
  SituationConfig cfg = cfkp_config(c.functor, {rat(0), rat(1, 3), rat(2, 3)});
  auto lp0 = logical_predicate(cfg, c, 0);
  CHECK(std::get<Partition>(lp0.element).num_blocks == 1);
  auto lp1 = logical_predicate(cfg, c, 1);
  CHECK(std::get<Partition>(lp1.element).num_blocks == 2);
}

TEST_CASE("logical predicate: kmm depth 0 is the zero metric") {
  Coalgebra c = markov_mass_one();
  SituationConfig cfg = kmm_config(c.functor);
  auto lp = logical_predicate(cfg, c, 0);
  CHECK(std::get<Metric>(lp.element) == Metric::zero(3));
}

TEST_CASE("logical predicate: monotone in depth") {
  Coalgebra c = markov_mass_one();
  SituationConfig cfg = kmm_config(c.functor);
  GeneratedSet g = generate_semantics(cfg, c, 4);
  for (int n = 0; n < 4; ++n) {
    auto lo = logical_predicate_from(cfg, c, g, n + 1);
    auto hi = logical_predicate_from(cfg, c, g, n);
    CHECK(leq(lo.element, hi.element));
  }
}

TEST_CASE("witness formula: separation, ties and symmetry") {
  Coalgebra c = lmp_third_twothirds();
  SituationConfig cfg = cfkp_config(c.functor, {rat(0), rat(1, 3), rat(2, 3)});
  WitnessResult w = witness_formula(cfg, c, 0, 1, 1);
  CHECK(w.separation == 1.0);
  CHECK(print_formula(w.formula, cfg) == "dia[a:1/3](T)");
  WitnessResult w2 = witness_formula(cfg, c, 1, 0, 1);
  CHECK(w2.separation == w.separation);

  // Bisimilar pair: zero separation witnessed by the unit.
  Coalgebra sym;
  sym.carrier = Carrier(2);
  sym.functor = FunctorSpec::exponent(FunctorSpec::dist(FunctorSpec::id()), {"a"});
  sym.next = {BehaviorValue::tuple({dist_states({{0, rat(1, 2)}})}),
              BehaviorValue::tuple({dist_states({{1, rat(1, 2)}})})};
  sym.validate();
  SituationConfig cfg2 = cfkp_config(sym.functor, {rat(1, 4)});
  WitnessResult w3 = witness_formula(cfg2, sym, 0, 1, 2);
  CHECK(w3.separation == 0.0);
  CHECK(print_formula(w3.formula, cfg2) == "T");
}
