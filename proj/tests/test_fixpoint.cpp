#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "codense/fixpoint.hpp"
#include "codense/fuzz.hpp"
#include "codense/logic.hpp"

using namespace codense;

TEST_CASE("eqrel chain: identical rows collapse in one step") {
  Coalgebra c;
  c.carrier = Carrier(2);
  c.functor = FunctorSpec::dist(FunctorSpec::id());
  c.next = {BehaviorValue::dist({BehaviorValue::state(0), BehaviorValue::state(1)}, {rat(1, 4), rat(1, 4)}),
            BehaviorValue::dist({BehaviorValue::state(0), BehaviorValue::state(1)}, {rat(1, 4), rat(1, 4)})};
  c.validate();
  SituationConfig cfg;
  cfg.fiber = FiberKind::EqRel;
  cfg.omega = TruthObject::Two;
  cfg.functor = c.functor;
  cfg.connectives = cfkp_connectives();
  ModalityDef thr = make_modality("t:1/8", {}, LeafEval::Threshold);
  thr.threshold = rat(1, 8);
  cfg.modalities = {thr};
  cfg.validate();
  auto [nu, report] = kleene_gfp(cfg, c);
  CHECK(report.converged);
  CHECK(report.iterations == 1);
  CHECK(std::get<Partition>(nu).num_blocks == 1);
}

TEST_CASE("eqrel chains stabilize within carrier-size iterations and end in a fixed point") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    Coalgebra c = fuzz::random_lmp(rng, 6, 2, 8);
    SituationConfig cfg = cfkp_config(c.functor, fuzz::grid_thresholds(4));
    auto [nu, report] = kleene_gfp(cfg, c);
    CHECK(report.converged);
    CHECK(report.iterations <= c.carrier.size + 1);
    CHECK(lift_step_eqrel(cfg, c, std::get<Partition>(nu)) == std::get<Partition>(nu));
    // chain is descending
    for (std::size_t i = 0; i + 1 < report.iterates.size(); ++i)
      CHECK(leq(report.iterates[i + 1], report.iterates[i]));
  }
}

TEST_CASE("pmet chain: converged results are nearly fixed") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Coalgebra c = fuzz::random_markov(rng, 5);
    SituationConfig cfg = kmm_config(c.functor);
    ChainOptions opts;
    auto [nu, report] = kleene_gfp(cfg, c, opts);
    REQUIRE(report.converged);
    Metric once_more = lift_step_pmet(cfg, c, std::get<Metric>(nu));
    CHECK(metric_residual(once_more, std::get<Metric>(nu)) <= 2 * opts.tol);
    for (std::size_t i = 0; i + 1 < report.iterates.size(); ++i)
      CHECK(leq(report.iterates[i + 1], report.iterates[i]));
  }
}

TEST_CASE("pmet chain agrees with a double-budget rerun") {
  std::mt19937_64 rng(19);
  Coalgebra c = fuzz::random_markov(rng, 4);
  SituationConfig cfg = kmm_config(c.functor);
  auto [nu, report] = kleene_gfp(cfg, c, {200, 1e-7});
  REQUIRE(report.converged);
  // fifty-iterate oracle with no early stop
  FiberElement cur = top(cfg.fiber, c.carrier);
  for (int i = 0; i < 50; ++i) cur = lift_step(cfg, c, cur);
  CHECK(metric_residual(std::get<Metric>(cur), std::get<Metric>(nu)) <= 1e-5);
}

TEST_CASE("max_iter exhaustion flags unconverged and returns the last iterate") {
  // Mass defect 1 vs 1/2 forces a nonzero first step.
  Coalgebra c;
  c.carrier = Carrier(2);
  c.functor = FunctorSpec::dist(FunctorSpec::id());
  c.next = {BehaviorValue::dist({BehaviorValue::state(0)}, {rat(1)}),
            BehaviorValue::dist({BehaviorValue::state(1)}, {rat(1, 2)})};
  c.validate();
  SituationConfig cfg = kmm_config(c.functor);
  auto [nu, report] = kleene_gfp(cfg, c, {1, 1e-12});
  CHECK_FALSE(report.converged);
  CHECK(report.iterations == 1);
  CHECK(fiber_equal(nu, report.iterates.back()));
}

TEST_CASE("postfixpoint certification") {
  std::mt19937_64 rng(29);
  Coalgebra c = fuzz::random_lmp(rng, 5, 2, 8);
  SituationConfig cfg = cfkp_config(c.functor, fuzz::grid_thresholds(4));
  auto [nu, report] = kleene_gfp(cfg, c);

  // nu itself is a (post-)fixed point
  auto cert = certify_postfixpoint(cfg, c, nu);
  CHECK(cert.is_postfixed);
  CHECK(cert.implies_below_gfp);
  REQUIRE(cert.below_computed_gfp.has_value());
  CHECK(*cert.below_computed_gfp);

  // the discrete partition is sqleq-least, hence always post-fixed
  auto discrete = bottom(FiberKind::EqRel, c.carrier);
  auto cert2 = certify_postfixpoint(cfg, c, discrete);
  CHECK(cert2.is_postfixed);
}

TEST_CASE("a relation merging a live state with a deadlock is not an invariant") {
  // 3-state Kripke frame: s0 -> s1 -> s2, s2 deadlocked.
  Coalgebra c;
  c.carrier = Carrier(3);
  c.functor = FunctorSpec::pow(FunctorSpec::id());
  c.next = {BehaviorValue::set({BehaviorValue::state(1)}), BehaviorValue::set({BehaviorValue::state(2)}),
            BehaviorValue::set({})};
  c.validate();
  SituationConfig cfg;
  cfg.fiber = FiberKind::EqRel;
  cfg.omega = TruthObject::Two;
  cfg.functor = c.functor;
  cfg.connectives = cfkp_connectives();
  cfg.modalities = {make_modality("dia", {}, LeafEval::Diamond)};
  cfg.validate();
  // relate s1 (live) with s2 (deadlock)
  Partition merged = canonical_partition(std::vector<int>{0, 1, 1});
  auto cert = certify_postfixpoint(cfg, c, FiberElement(merged));
  CHECK_FALSE(cert.is_postfixed);
}

TEST_CASE("every certified invariant sits below nu") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    Coalgebra c = fuzz::random_lmp(rng, 5, 2, 8);
    SituationConfig cfg = cfkp_config(c.functor, fuzz::grid_thresholds(4));
    auto [nu, report] = kleene_gfp(cfg, c);
    std::vector<int> ids(c.carrier.size);
    for (auto& x : ids) x = static_cast<int>(rng() % 3);
    FiberElement p = canonical_partition(ids);
    auto cert = certify_postfixpoint(cfg, c, p);
    if (cert.is_postfixed) CHECK(leq(p, nu));
  }
}

TEST_CASE("stepwise sequence starts at top and is bounded by the logical predicate") {
  std::mt19937_64 rng(37);
  auto seq0 = stepwise_sequence(cfkp_config(fuzz::random_lmp(rng, 4, 1, 8).functor, {rat(1, 2)}),
                                fuzz::random_lmp(rng, 4, 1, 8), 0);
  CHECK(seq0.size() == 1);

  for (int trial = 0; trial < 10; ++trial) {
    Coalgebra c = fuzz::random_lmp(rng, 5, 2, 8);
    SituationConfig cfg = cfkp_config(c.functor, fuzz::grid_thresholds(4));
    auto seq = stepwise_sequence(cfg, c, 3);
    GeneratedSet gen = generate_semantics(cfg, c, 3);
    for (int i = 0; i <= 3; ++i) {
      auto lp = logical_predicate_from(cfg, c, gen, i);
      CHECK(leq(seq[i], lp.element));
    }
  }
}
