// codense: codensity bisimilarities, quantitative modal logics, and the
// observation game over finite coalgebras.
//
// Subcommands: bisim, logic, check, game, approx. One JSON file carries the
// system and the situation; flags only tune budgets and tolerances.
// Exit codes: 0 ok, 2 validation error, 3 non-convergence, 4 refusal.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "codense/expressivity.hpp"
#include "codense/fixpoint.hpp"
#include "codense/fuzz.hpp"
#include "codense/game.hpp"
#include "codense/instances.hpp"
#include "codense/json_io.hpp"
#include "codense/logic.hpp"

using namespace codense;

namespace {

struct CommonOpts {
  std::string file;
  std::string json_out;
  bool quiet = false;
};

void emit_json(const CommonOpts& opts, const Json& j) {
  if (opts.json_out.empty()) return;
  std::ofstream out(opts.json_out);
  if (!out) throw validation_error("cannot write '" + opts.json_out + "'");
  out << j.dump(2) << "\n";
}

std::ostream& info(const CommonOpts& opts) {
  static std::ofstream devnull("/dev/null");
  return opts.quiet ? devnull : std::cout;
}

GenerationCaps caps_from(const SituationConfig& cfg, int max_vectors, int max_rounds) {
  GenerationCaps caps = cfg.caps;
  if (max_vectors > 0) caps.vectors_per_level = max_vectors;
  if (max_rounds > 0) caps.rounds_per_level = max_rounds;
  return caps;
}

int cmd_bisim(const CommonOpts& opts, double tol, int max_iter) {
  SystemFile sf = load_system_file(opts.file);
  ChainOptions chain{max_iter, tol};
  auto [nu, report] = kleene_gfp(sf.situation, sf.coalgebra, chain);

  Json j;
  j["fiber"] = fiber_kind_name(sf.situation.fiber);
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["residual"] = report.residual;
  j["result"] = fiber_element_json(nu, sf.coalgebra.carrier);
  emit_json(opts, j);

  auto& os = info(opts);
  if (sf.situation.fiber == FiberKind::PMet1) {
    const Metric& m = std::get<Metric>(nu);
    os << "bisimulation pseudometric (chain length " << report.iterations << ", "
       << (report.converged ? "converged" : "NOT converged") << ", residual " << report.residual << ")\n";
    for (int s = 0; s < m.n; ++s) {
      for (int t = 0; t < m.n; ++t) os << (t ? " " : "") << m.at(s, t);
      os << "\n";
    }
  } else {
    os << "bisimilarity partition (chain length " << report.iterations << ", "
       << (report.converged ? "converged" : "NOT converged") << ")\n"
       << partition_to_string(std::get<Partition>(nu), sf.coalgebra.carrier) << "\n";
  }
  return report.converged ? 0 : 3;
}

int cmd_logic(const CommonOpts& opts, int depth_bound, int max_vectors, int max_rounds) {
  SystemFile sf = load_system_file(opts.file);
  GeneratedSet gen =
      generate_semantics(sf.situation, sf.coalgebra, depth_bound, caps_from(sf.situation, max_vectors, max_rounds));
  auto lp = logical_predicate_from(sf.situation, sf.coalgebra, gen, depth_bound);

  int n = sf.coalgebra.carrier.size;
  Json witnesses = Json::array();
  auto& os = info(opts);
  os << "logical predicate at depth " << depth_bound << (gen.truncated ? " (truncated closure)" : "")
     << ", generated vectors: " << gen.entries.size() << "\n";
  if (sf.situation.fiber == FiberKind::PMet1) {
    const Metric& m = std::get<Metric>(lp.element);
    os << "logical distance matrix:\n";
    for (int s = 0; s < n; ++s) {
      for (int t = 0; t < n; ++t) os << (t ? " " : "") << m.at(s, t);
      os << "\n";
    }
  } else {
    os << "logical kernel: " << partition_to_string(std::get<Partition>(lp.element), sf.coalgebra.carrier)
       << "\n";
  }
  for (int s = 0; s < n; ++s)
    for (int t = s + 1; t < n; ++t) {
      bool separated = sf.situation.fiber == FiberKind::PMet1
                           ? std::get<Metric>(lp.element).at(s, t) > kMetricTol
                           : !std::get<Partition>(lp.element).same_block(s, t);
      if (!separated) continue;
      WitnessResult w = witness_formula_from(gen, s, t, depth_bound);
      std::string text = print_formula(w.formula, sf.situation);
      os << "  " << sf.coalgebra.carrier.name(s) << " / " << sf.coalgebra.carrier.name(t) << ": separation "
         << w.separation << " by " << text << "\n";
      Json jw;
      jw["s"] = sf.coalgebra.carrier.name(s);
      jw["t"] = sf.coalgebra.carrier.name(t);
      jw["separation"] = w.separation;
      jw["formula"] = text;
      witnesses.push_back(jw);
    }

  Json j;
  j["depth"] = depth_bound;
  j["truncated"] = gen.truncated;
  j["lower_bound"] = lp.lower_bound;
  j["generated"] = gen.entries.size();
  j["result"] = fiber_element_json(lp.element, sf.coalgebra.carrier);
  j["witnesses"] = witnesses;
  emit_json(opts, j);
  return 0;
}

int cmd_check(const CommonOpts& opts, const std::string& mode, double eps, int depth_max, double tol,
              int max_iter, int max_vectors, int max_rounds) {
  SystemFile sf = load_system_file(opts.file);
  GenerationCaps caps = caps_from(sf.situation, max_vectors, max_rounds);
  ChainOptions chain{max_iter, tol};
  ExpressivityReport rep;
  if (mode == "adequacy")
    rep = check_adequacy(sf.situation, sf.coalgebra, depth_max, caps, chain);
  else if (mode == "expressivity")
    rep = check_expressivity(sf.situation, sf.coalgebra, eps, depth_max, caps, chain);
  else
    throw validation_error("--mode must be adequacy or expressivity");

  auto& os = info(opts);
  if (mode == "adequacy") {
    os << "adequacy: " << (rep.adequate ? "PASS" : "FAIL") << " (" << rep.adequacy_note << ")\n";
    if (rep.gap_s >= 0)
      os << "  max logical excess " << rep.gap_value << " at (" << sf.coalgebra.carrier.name(rep.gap_s) << ", "
         << sf.coalgebra.carrier.name(rep.gap_t) << ")\n";
  } else {
    if (sf.situation.fiber == FiberKind::PMet1)
      os << "expressivity within eps=" << rep.eps << ": " << (rep.expressive ? "PASS" : "FAIL")
         << (rep.expressive ? " at depth " + std::to_string(rep.depth_used) : "") << "\n";
    else
      os << "expressivity (exact): " << (rep.expressive ? "PASS" : "FAIL")
         << (rep.expressive ? " at depth " + std::to_string(rep.depth_used) : "") << "\n";
    if (!rep.expressive && rep.gap_s >= 0)
      os << "  residual gap " << rep.gap_value << " at (" << sf.coalgebra.carrier.name(rep.gap_s) << ", "
         << sf.coalgebra.carrier.name(rep.gap_t) << ")\n";
    os << "  knaster-tarski route: " << rep.kt_route << "\n";
    os << "  kleene route: " << rep.kleene_route << "\n";
    if (rep.truncated) os << "  note: generation truncated by caps\n";
  }
  emit_json(opts, expressivity_report_json(rep, sf.coalgebra.carrier));
  return 0;
}

int cmd_game(const CommonOpts& opts, const std::string& role, const std::string& script, int cutoff) {
  SystemFile sf = load_system_file(opts.file);
  GameOptions gopts;
  gopts.role = role;
  gopts.cutoff = cutoff;
  std::ifstream script_in;
  std::istream* in = &std::cin;
  if (!script.empty()) {
    script_in.open(script);
    if (!script_in) throw validation_error("cannot open script '" + script + "'");
    in = &script_in;
  }
  PlayRecord rec = play_game(sf.situation, sf.coalgebra, gopts, *in, std::cout);
  const char* outcome = rec.outcome == PlayRecord::Outcome::SpoilerStuck            ? "spoiler stuck"
                        : rec.outcome == PlayRecord::Outcome::DuplicatorStuck       ? "duplicator stuck"
                        : rec.outcome == PlayRecord::Outcome::CutoffReachedInfinite ? "infinite (duplicator wins)"
                                                                                    : "quit";
  std::cout << "outcome: " << outcome << " after " << rec.moves.size() << " moves\n";
  Json j;
  j["outcome"] = outcome;
  j["moves"] = rec.moves;
  emit_json(opts, j);
  return 0;
}

int cmd_approx(const CommonOpts& opts, const std::string& set_spec, int depth_bound, int grid, int budget,
               int max_vectors, int max_rounds) {
  SystemFile sf = load_system_file(opts.file);
  ObservationSet S;
  bool truncated = false;
  if (set_spec == "generated") {
    GeneratedSet gen = generate_semantics(sf.situation, sf.coalgebra, depth_bound,
                                          caps_from(sf.situation, max_vectors, max_rounds));
    truncated = gen.truncated;
    S = ObservationSet::from_generated(sf.situation, gen, depth_bound);
  } else if (!set_spec.empty() && set_spec[0] == '@') {
    std::ifstream in(set_spec.substr(1));
    if (!in) throw validation_error("cannot open observation set '" + set_spec.substr(1) + "'");
    Json j;
    in >> j;
    for (const auto& entry : j.at("observations")) {
      S.labels.push_back(entry.value("label", "custom"));
      std::vector<double> v;
      for (const auto& x : entry.at("values")) {
        if (x.is_string())
          v.push_back(to_double(parse_rat(x.get<std::string>())));
        else
          v.push_back(x.get<double>());
      }
      if (static_cast<int>(v.size()) != sf.coalgebra.carrier.size)
        throw validation_error("observation arity does not match the carrier");
      S.vectors.push_back(std::move(v));
    }
  } else {
    throw validation_error("--set must be 'generated' or '@file'");
  }

  auto& os = info(opts);
  Json j;
  j["set_size"] = S.vectors.size();
  j["truncated"] = truncated;
  if (sf.situation.fiber == FiberKind::EqRel && sf.situation.omega == TruthObject::Two) {
    auto res = is_approximating_eqrel(S, sf.situation, sf.coalgebra);
    os << "approximating family (exact eqrel check): " << (res.holds ? "HOLDS" : "VIOLATED") << "\n";
    j["holds"] = res.holds;
    if (res.counterexample) {
      const auto& cex = *res.counterexample;
      os << "  counterexample h = " << detail::fmt_obs(cex.h) << " with modality '" << cex.modality
         << "' separating (" << sf.coalgebra.carrier.name(cex.s) << ", " << sf.coalgebra.carrier.name(cex.t)
         << ")\n";
      Json jc;
      jc["h"] = cex.h;
      jc["modality"] = cex.modality;
      jc["pair"] = Json::array({sf.coalgebra.carrier.name(cex.s), sf.coalgebra.carrier.name(cex.t)});
      j["counterexample"] = jc;
    }
    emit_json(opts, j);
    return 0;
  }
  if (sf.situation.fiber == FiberKind::PMet1) {
    auto res = is_approximating_pmet_sampled(S, sf.situation, sf.coalgebra, grid, budget);
    os << "approximating family (" << res.note << ", " << res.sampled << " samples): "
       << (res.pass ? "PASS" : "FAIL") << "\n";
    j["pass"] = res.pass;
    j["note"] = res.note;
    j["sampled"] = res.sampled;
    emit_json(opts, j);
    return 0;
  }
  auto chk = closure_conditions_check(S, sf.situation);
  os << "closure under connectives: " << (chk.closed_under_connectives ? "yes" : "no") << "\n"
     << "totally bounded: yes (finite carrier)\n";
  if (chk.missing) os << "  first missing: " << *chk.missing << "\n";
  j["closed_under_connectives"] = chk.closed_under_connectives;
  j["totally_bounded"] = true;
  emit_json(opts, j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"codensity bisimilarities, quantitative modal logics and the observation game"};
  app.require_subcommand(1);

  CommonOpts common;
  double tol = 1e-7, eps = 0.05;
  int max_iter = 200, depth = 3, depth_max = 8, cutoff = 50, grid = 8, budget = 4000;
  int max_vectors = 0, max_rounds = 0;
  std::string mode = "adequacy", role = "watch", script, set_spec = "generated";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", common.file, "system/situation JSON file")->required();
    sub->add_option("--json-out", common.json_out, "write the result as JSON to PATH");
    sub->add_flag("--quiet", common.quiet, "suppress the text report");
  };

  CLI::App* bisim = app.add_subcommand("bisim", "compute the codensity bisimilarity (gfp)");
  add_common(bisim);
  bisim->add_option("--tol", tol, "metric convergence tolerance");
  bisim->add_option("--max-iter", max_iter, "iteration budget");

  CLI::App* logic = app.add_subcommand("logic", "logical kernel/distance with witness formulas");
  add_common(logic);
  logic->add_option("--depth", depth, "modal depth bound");
  logic->add_option("--max-vectors", max_vectors, "per-level generation budget");
  logic->add_option("--max-rounds", max_rounds, "closure rounds per level");

  CLI::App* check = app.add_subcommand("check", "adequacy / expressivity verdicts");
  add_common(check);
  check->add_option("--mode", mode, "adequacy | expressivity");
  check->add_option("--eps", eps, "metric expressivity slack");
  check->add_option("--depth-max", depth_max, "maximum modal depth");
  check->add_option("--tol", tol, "metric convergence tolerance");
  check->add_option("--max-iter", max_iter, "iteration budget");
  check->add_option("--max-vectors", max_vectors, "per-level generation budget");
  check->add_option("--max-rounds", max_rounds, "closure rounds per level");

  CLI::App* game = app.add_subcommand("game", "play the codensity bisimilarity game");
  add_common(game);
  game->add_option("--role", role, "spoiler | duplicator | watch");
  game->add_option("--script", script, "read moves from FILE");
  game->add_option("--cutoff", cutoff, "rounds before an infinite play is declared");

  CLI::App* approx = app.add_subcommand("approx", "approximating-family verdict");
  add_common(approx);
  approx->add_option("--set", set_spec, "'generated' or '@file' with custom observations");
  approx->add_option("--depth", depth, "depth bound for the generated set");
  approx->add_option("--grid", grid, "grid denominator for sampled checks");
  approx->add_option("--budget", budget, "sample budget for sampled checks");
  approx->add_option("--max-vectors", max_vectors, "per-level generation budget");
  approx->add_option("--max-rounds", max_rounds, "closure rounds per level");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bisim->parsed()) return cmd_bisim(common, tol, max_iter);
    if (logic->parsed()) return cmd_logic(common, depth, max_vectors, max_rounds);
    if (check->parsed()) return cmd_check(common, mode, eps, depth_max, tol, max_iter, max_vectors, max_rounds);
    if (game->parsed()) return cmd_game(common, role, script, cutoff);
    if (approx->parsed()) return cmd_approx(common, set_spec, depth, grid, budget, max_vectors, max_rounds);
  } catch (const refusal_error& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 4;
  } catch (const lp_error& e) {
    std::cerr << "lp error: " << e.what() << "\n";
    return 3;
  } catch (const validation_error& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
