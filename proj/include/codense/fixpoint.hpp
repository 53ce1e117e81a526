#pragma once

// Kleene iteration of the pulled-back codensity lifting from the top element,
// convergence detection, and post-fixed-point certification. The eqrel result
// is the exact greatest fixed point (finite lattice); the pseudometric result
// is an approximation flagged converged once the sup-norm residual drops
// below tolerance.

#include <cmath>
#include <optional>
#include <vector>

#include "codense/codensity.hpp"
#include "codense/fiber.hpp"

namespace codense {

inline FiberElement lift_step(const SituationConfig& cfg, const Coalgebra& c, const FiberElement& P) {
  switch (cfg.fiber) {
    case FiberKind::EqRel:
      if (cfg.omega == TruthObject::Two) return lift_step_eqrel(cfg, c, std::get<Partition>(P));
      return lift_step_bu_kernel(cfg, c, std::get<Partition>(P));
    case FiberKind::PMet1: return lift_step_pmet(cfg, c, std::get<Metric>(P));
    case FiberKind::BoolPred: break;
  }
  throw validation_error("no lifted step for the boolpred fiber");
}

struct ChainOptions {
  int max_iter = 200;
  double tol = 1e-7;
};

struct ChainReport {
  std::vector<FiberElement> iterates;  // starts at top
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // sup-norm change of the last step (0 for partitions)
};

inline double metric_residual(const Metric& a, const Metric& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.d.size(); ++i) r = std::max(r, std::abs(a.d[i] - b.d[i]));
  return r;
}

inline std::pair<FiberElement, ChainReport> kleene_gfp(const SituationConfig& cfg, const Coalgebra& c,
                                                       ChainOptions opts = {}) {
  ChainReport report;
  FiberElement cur = top(cfg.fiber, c.carrier);
  report.iterates.push_back(cur);
  for (int i = 0; i < opts.max_iter; ++i) {
    FiberElement next = lift_step(cfg, c, cur);
    report.iterates.push_back(next);
    ++report.iterations;
    if (cfg.fiber == FiberKind::EqRel) {
      if (std::get<Partition>(next) == std::get<Partition>(cur)) {
        report.converged = true;
        report.residual = 0.0;
        return {next, report};
      }
    } else {
      double r = metric_residual(std::get<Metric>(next), std::get<Metric>(cur));
      report.residual = r;
      if (r < opts.tol) {
        report.converged = true;
        return {next, report};
      }
    }
    cur = std::move(next);
  }
  return {cur, report};  // flagged unconverged
}

struct PostFixpointCertificate {
  bool is_postfixed = false;
  bool implies_below_gfp = false;  // Knaster-Tarski: every invariant is below nu
  std::optional<bool> below_computed_gfp;
};

inline PostFixpointCertificate certify_postfixpoint(const SituationConfig& cfg, const Coalgebra& c,
                                                    const FiberElement& P, ChainOptions opts = {}) {
  PostFixpointCertificate cert;
  cert.is_postfixed = leq(P, lift_step(cfg, c, P));
  cert.implies_below_gfp = cert.is_postfixed;
  if (cert.is_postfixed) {
    auto [nu, report] = kleene_gfp(cfg, c, opts);
    if (cfg.fiber == FiberKind::EqRel || report.converged) cert.below_computed_gfp = leq(P, nu);
  }
  return cert;
}

// First n+1 Kleene iterates, for stepwise comparison against the logical
// predicate per depth.
inline std::vector<FiberElement> stepwise_sequence(const SituationConfig& cfg, const Coalgebra& c, int n) {
  std::vector<FiberElement> out;
  FiberElement cur = top(cfg.fiber, c.carrier);
  out.push_back(cur);
  for (int i = 0; i < n; ++i) {
    cur = lift_step(cfg, c, cur);
    out.push_back(cur);
  }
  return out;
}

}  // namespace codense
