#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pregeomzol/colouring.hpp"
#include "pregeomzol/logic.hpp"
#include "pregeomzol/serialize.hpp"

namespace pregeomzol {

inline const char* tool_version() { return "0.1.0"; }

struct ExperimentSpec {
  std::string experiment;  // enumerate | sample | check-xi | zero-one |
                           // unique-colouring | ramsey-min-dim | ext-axiom |
                           // find-u | validate
  SamplerConfig cfg;
  unsigned n_lo = 0, n_hi = 0;        // per-n ranges; 0 means cfg.n only
  std::string event_type = "relations_nonempty";  // zero-one events
  std::string event_sexpr;
  unsigned target_rank = 2;           // ramsey
  unsigned n_max = 4;                 // ramsey search bound
  unsigned ambient_rank = 3;          // weak-case pipeline ambient
  std::string input_path;             // validate
  std::string out_dir = "out";

  unsigned lo() const { return n_lo ? n_lo : cfg.n; }
  unsigned hi() const { return n_hi ? n_hi : cfg.n; }
};

// canonical JSON form; the manifest embeds it so a run can be reproduced
// from its manifest alone
inline Json spec_to_json(const ExperimentSpec& s) {
  Json j;
  j["experiment"] = s.experiment;
  j["kind"] = kind_name(s.cfg.kind);
  j["q"] = s.cfg.q;
  j["n"] = s.cfg.n;
  j["l"] = s.cfg.l;
  j["strong"] = s.cfg.strong;
  j["colour_rule"] = colour_rule_name(s.cfg.rule);
  j["symmetric_irreflexive"] = s.cfg.vocab.symmetric_irreflexive;
  j["vocab"] = vocab_to_json(s.cfg.vocab);
  j["seed"] = s.cfg.seed;
  j["samples"] = s.cfg.samples;
  j["n_lo"] = s.n_lo;
  j["n_hi"] = s.n_hi;
  j["event_type"] = s.event_type;
  j["event_sexpr"] = s.event_sexpr;
  j["target_rank"] = s.target_rank;
  j["n_max"] = s.n_max;
  j["ambient_rank"] = s.ambient_rank;
  j["input_path"] = s.input_path;
  return j;
}

inline ExperimentSpec spec_from_json(const Json& in) {
  const Json& j = in.contains("spec") ? in.at("spec") : in;  // accept a manifest
  ExperimentSpec s;
  if (j.contains("experiment")) s.experiment = j.at("experiment").get<std::string>();
  if (j.contains("kind")) s.cfg.kind = kind_from_name(j.at("kind").get<std::string>());
  if (j.contains("q")) s.cfg.q = j.at("q").get<unsigned>();
  if (j.contains("n")) s.cfg.n = j.at("n").get<unsigned>();
  if (j.contains("l")) s.cfg.l = j.at("l").get<unsigned>();
  if (j.contains("strong")) s.cfg.strong = j.at("strong").get<bool>();
  if (j.contains("colour_rule"))
    s.cfg.rule = colour_rule_from_name(j.at("colour_rule").get<std::string>());
  bool sym = j.contains("symmetric_irreflexive") && j.at("symmetric_irreflexive").get<bool>();
  if (j.contains("vocab"))
    s.cfg.vocab = vocab_from_json(j.at("vocab"), sym);
  else
    s.cfg.vocab = binary_vocab(sym);
  if (j.contains("seed")) s.cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("samples")) s.cfg.samples = j.at("samples").get<std::uint64_t>();
  if (j.contains("n_lo")) s.n_lo = j.at("n_lo").get<unsigned>();
  if (j.contains("n_hi")) s.n_hi = j.at("n_hi").get<unsigned>();
  if (j.contains("event_type")) s.event_type = j.at("event_type").get<std::string>();
  if (j.contains("event_sexpr")) s.event_sexpr = j.at("event_sexpr").get<std::string>();
  if (j.contains("target_rank")) s.target_rank = j.at("target_rank").get<unsigned>();
  if (j.contains("n_max")) s.n_max = j.at("n_max").get<unsigned>();
  if (j.contains("ambient_rank")) s.ambient_rank = j.at("ambient_rank").get<unsigned>();
  if (j.contains("input_path")) s.input_path = j.at("input_path").get<std::string>();
  return s;
}

inline std::string spec_hash(const ExperimentSpec& s) {
  return hex64(fnv1a64(spec_to_json(s).dump()));
}

// ---------------------------------------------------------------------------
// Per-experiment report builders. Each returns a list of (file name, bytes).

using Outputs = std::vector<std::pair<std::string, std::string>>;

namespace experiments {

inline Outputs enumerate(const ExperimentSpec& spec) {
  Pregeometry pg = Pregeometry::family_member(spec.cfg.kind, spec.cfg.q, spec.cfg.n);
  std::vector<RelSymbol> symbols = spec.cfg.vocab.symbols;
  EnumerationCounts c = enumeration_counts(pg, symbols, spec.cfg.l, spec.cfg.strong);
  Json j;
  j["kind"] = kind_name(spec.cfg.kind);
  j["q"] = spec.cfg.q;
  j["n"] = spec.cfg.n;
  j["l"] = spec.cfg.l;
  j["strong"] = spec.cfg.strong;
  j["colourings"] = c.colourings;
  j["counts"] = Json{{"closure_ordered", c.closure_ordered},
                     {"closure_symmetric_irreflexive", c.closure_symmetric},
                     {"tuple_ordered", c.tuple_ordered},
                     {"tuple_symmetric_irreflexive", c.tuple_symmetric}};
  Json matches = Json::array();
  for (auto& [name, value] :
       std::vector<std::pair<std::string, std::uint64_t>>{
           {"closure_ordered", c.closure_ordered},
           {"closure_symmetric_irreflexive", c.closure_symmetric},
           {"tuple_ordered", c.tuple_ordered},
           {"tuple_symmetric_irreflexive", c.tuple_symmetric}})
    if (value == 26) matches.push_back(name);
  j["settings_counting_26"] = matches;
  return {{"enumerate.json", j.dump(2) + "\n"}};
}

inline Outputs sample(const ExperimentSpec& spec) {
  Sampler sampler(spec.cfg);
  Json arr = Json::array();
  for (std::uint64_t i = 0; i < spec.cfg.samples; ++i)
    arr.push_back(coloured_to_json(sampler.draw(i)));
  return {{"samples.json", arr.dump(2) + "\n"}};
}

// Per sampled structure, compare the colour-definability formula against
// (a) the generating colours and (b) the every-colouring CSP oracle.
// Soundness violations must be zero; completeness agreement is reported as
// a rate, not asserted.
inline Outputs check_xi(const ExperimentSpec& spec) {
  CsvWriter csv({"n", "samples", "pairs", "xi_true", "soundness_violations_colours",
                 "soundness_violations_oracle", "oracle_same_pairs",
                 "xi_true_oracle_same", "completeness_rate", "budget_exceeded",
                 "seed", "spec_hash"});
  const std::string hash = spec_hash(spec);

  std::optional<C0Result> weak_b;
  if (!spec.cfg.strong) {
    Pregeometry ambient =
        Pregeometry::family_member(spec.cfg.kind, spec.cfg.q, spec.ambient_rank);
    weak_b = find_c0_and_build_B(ambient, spec.cfg.l,
                                 Vocabulary(spec.cfg.vocab.symbols,
                                            spec.cfg.vocab.symmetric_irreflexive));
  } else {
    TThreshold th = t_threshold(spec.cfg.kind, spec.cfg.q, spec.cfg.l);
    if (th.t < 2)
      throw std::invalid_argument("check-xi: strong mode requires t >= 2 for this family");
  }

  for (unsigned n = spec.lo(); n <= spec.hi(); ++n) {
    SamplerConfig cfg = spec.cfg;
    cfg.n = n;
    Sampler sampler(cfg);
    std::uint64_t pairs = 0, xi_true = 0, viol_colours = 0, viol_oracle = 0;
    std::uint64_t oracle_same = 0, xi_and_oracle = 0;
    for (std::uint64_t i = 0; i < cfg.samples; ++i) {
      ColouredStructure M = sampler.draw(i);
      ColourCSP csp = build_csp(M.base, cfg.l, cfg.strong, cfg.rule);
      std::vector<int> classes = same_colour_classes(csp);

      // xi0 matrix for the weak case, via embedding search
      std::vector<std::vector<bool>> xi0;
      if (weak_b) {
        const std::size_t N = M.base.universe.size();
        xi0.assign(N, std::vector<bool>(N, false));
        for (std::size_t ui = 0; ui < N; ++ui)
          for (std::size_t vi = 0; vi < N; ++vi)
            xi0[ui][vi] = xi0_weak_holds(M.base, weak_b->B, weak_b->b1, weak_b->b2,
                                         M.base.universe[ui], M.base.universe[vi]);
      }
      std::optional<XiStrongEvaluator> strong_eval;
      if (!weak_b) strong_eval.emplace(M.base, M.l);
      auto xi_holds = [&](std::size_t ai, std::size_t bi) {
        Point a = M.base.universe[ai], b = M.base.universe[bi];
        if (!weak_b) return strong_eval->holds(a, b);
        if (M.base.pg.theta({b}, a)) return true;
        for (std::size_t zi = 0; zi < M.base.universe.size(); ++zi)
          if (xi0[ai][zi] && xi0[bi][zi]) return true;
        return false;
      };

      const std::size_t N = M.base.universe.size();
      for (std::size_t ai = 0; ai < N; ++ai) {
        Point a = M.base.universe[ai];
        int fa = csp.flats.flat_of_point[a];
        if (fa < 0) continue;
        for (std::size_t bi = ai + 1; bi < N; ++bi) {
          Point b = M.base.universe[bi];
          int fb = csp.flats.flat_of_point[b];
          if (fb < 0) continue;
          ++pairs;
          bool xi = xi_holds(ai, bi);
          bool same_gen = M.colour_of(a) == M.colour_of(b);
          bool same_all = classes[fa] == classes[fb];
          if (same_all) ++oracle_same;
          if (xi) {
            ++xi_true;
            if (!same_gen) ++viol_colours;
            if (!same_all) ++viol_oracle;
            if (same_all) ++xi_and_oracle;
          }
        }
      }
    }
    double rate = oracle_same == 0
                      ? 1.0
                      : static_cast<double>(xi_and_oracle) / static_cast<double>(oracle_same);
    csv.row(n, cfg.samples, pairs, xi_true, viol_colours, viol_oracle, oracle_same,
            xi_and_oracle, rate, std::uint64_t(0), cfg.seed, hash);
  }
  return {{"check_xi.csv", csv.str()}};
}

inline std::function<Truth(const ColouredStructure&)> make_event(const ExperimentSpec& spec) {
  if (spec.event_type == "relations_nonempty")
    return [](const ColouredStructure& M) { return truth_of(!M.base.relations_empty()); };
  if (spec.event_type == "tautology")
    return [](const ColouredStructure&) { return Truth::True; };
  if (spec.event_type == "formula") {
    FormulaPtr f = from_sexpr(spec.event_sexpr);
    return [f](const ColouredStructure& M) { return evaluate(M, f); };
  }
  throw std::invalid_argument("unknown event type: " + spec.event_type);
}

// rows annotated with the step difference; rises and falls against the
// overall direction are flagged, not failed
inline std::string trend_csv(const std::vector<Estimate>& rows, const std::string& hash) {
  CsvWriter csv({"n", "event", "estimate", "ci_lo", "ci_hi", "samples",
                 "budget_exceeded", "seed", "spec_hash", "delta", "trend_flag"});
  double overall = rows.empty() ? 0.0 : rows.back().estimate - rows.front().estimate;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Estimate& e = rows[i];
    double delta = i == 0 ? 0.0 : e.estimate - rows[i - 1].estimate;
    bool against = i > 0 && delta != 0.0 && overall != 0.0 &&
                   ((delta > 0) != (overall > 0));
    csv.row(e.n, e.event, e.estimate, e.ci_lo, e.ci_hi, e.samples, e.budget_exceeded,
            e.seed, hash, delta, against ? "nonmonotone" : "");
  }
  return csv.str();
}

inline Outputs zero_one(const ExperimentSpec& spec) {
  auto event = make_event(spec);
  std::vector<Estimate> rows;
  for (unsigned n = spec.lo(); n <= spec.hi(); ++n) {
    SamplerConfig cfg = spec.cfg;
    cfg.n = n;
    rows.push_back(estimate_probability(cfg, spec.event_type, event));
  }
  return {{"zero_one.csv", trend_csv(rows, spec_hash(spec))}};
}

inline Outputs unique_colouring(const ExperimentSpec& spec) {
  std::vector<Estimate> rows;
  for (unsigned n = spec.lo(); n <= spec.hi(); ++n) {
    SamplerConfig cfg = spec.cfg;
    cfg.n = n;
    auto event = [&cfg](const ColouredStructure& M) {
      OrbitCount oc = count_colourings_up_to_perm(M.base, cfg.l, cfg.strong, 2, cfg.rule);
      return truth_of(oc.count == 1 && !oc.at_least);
    };
    rows.push_back(estimate_probability(cfg, "unique-colouring", event));
  }
  return {{"unique_colouring.csv", trend_csv(rows, spec_hash(spec))}};
}

inline Outputs ramsey_min_dim(const ExperimentSpec& spec) {
  RamseyProbe probe = min_ramsey_dim(spec.cfg.q, spec.cfg.l, spec.target_rank, spec.n_max);
  Json j;
  j["q"] = spec.cfg.q;
  j["l"] = spec.cfg.l;
  j["target_rank"] = spec.target_rank;
  if (probe.dim)
    j["min_dim"] = *probe.dim;
  else
    j["min_dim"] = nullptr;
  j["searched_to"] = probe.searched_to;
  j["colourings_checked"] = probe.colourings_checked;
  Json avo = Json::object();
  for (auto& [n, col] : probe.avoiding) avo[std::to_string(n)] = col;
  j["avoiding_colourings"] = avo;
  return {{"ramsey.json", j.dump(2) + "\n"}};
}

inline Outputs ext_axiom(const ExperimentSpec& spec) {
  // the rank-1 over rank-0 extension axiom for this family
  Pregeometry pg1 = Pregeometry::family_member(spec.cfg.kind, spec.cfg.q, 1);
  RelStructure B(pg1, spec.cfg.vocab);
  FormulaPtr xi = build_xi_strong(spec.cfg.l,
                                  spec.cfg.vocab.symbols[spec.cfg.vocab.min_arity_symbol()]);
  ExtensionAxiom ax =
      build_extension_axiom(B, pg1.closure({}), spec.cfg.l, spec.cfg.strong, xi, spec.cfg.rule);

  std::vector<Estimate> rows;
  for (unsigned n = spec.lo(); n <= spec.hi(); ++n) {
    SamplerConfig cfg = spec.cfg;
    cfg.n = n;
    auto event = [&ax](const ColouredStructure& M) {
      return evaluate(M.base, ax.axiom);
    };
    rows.push_back(estimate_probability(cfg, "ext-axiom-rank1", event));
  }
  Outputs out;
  out.emplace_back("ext_axiom.csv", trend_csv(rows, spec_hash(spec)));
  out.emplace_back("ext_axiom_formula.txt", to_sexpr(ax.axiom) + "\n");
  return out;
}

inline Outputs find_u(const ExperimentSpec& spec) {
  FindUBudget budget;
  budget.seed = spec.cfg.seed;
  budget.max_tries = spec.cfg.samples;
  budget.n_lo = spec.lo();
  budget.n_hi = spec.hi();
  std::optional<RelStructure> U = find_U(spec.cfg.kind, spec.cfg.q, spec.cfg.l,
                                         spec.cfg.vocab, spec.cfg.strong, budget,
                                         spec.cfg.rule);
  Json j;
  j["found"] = U.has_value();
  if (U) {
    std::optional<unsigned> chi = chromatic_min(*U, spec.cfg.strong, spec.cfg.l, spec.cfg.rule);
    j["chromatic_min"] = *chi;
    j["l"] = spec.cfg.l;
    j["structure"] = rel_to_json(*U);
  }
  return {{"find_u.json", j.dump(2) + "\n"}};
}

inline Outputs validate_file(const ExperimentSpec& spec) {
  Json in = Json::parse(read_file(spec.input_path));
  ColouredStructure M = coloured_from_json(in);
  std::vector<Violation> vs = validate(M, spec.cfg.strong, spec.cfg.rule);
  Json j;
  j["input"] = spec.input_path;
  j["strong"] = spec.cfg.strong;
  j["colour_rule"] = colour_rule_name(spec.cfg.rule);
  j["valid"] = vs.empty();
  j["violations"] = violations_to_json(vs);
  return {{"validate.json", j.dump(2) + "\n"}};
}

}  // namespace experiments

// Runs the experiment, writes its reports plus a manifest into out_dir.
// Exit codes: 0 success, 1 usage/config error, 2 resource cap, 3 broken
// internal invariant.
inline int run(const ExperimentSpec& spec) {
  auto t0 = std::chrono::steady_clock::now();
  Outputs outputs;
  try {
    if (spec.experiment == "enumerate") outputs = experiments::enumerate(spec);
    else if (spec.experiment == "sample") outputs = experiments::sample(spec);
    else if (spec.experiment == "check-xi") outputs = experiments::check_xi(spec);
    else if (spec.experiment == "zero-one") outputs = experiments::zero_one(spec);
    else if (spec.experiment == "unique-colouring") outputs = experiments::unique_colouring(spec);
    else if (spec.experiment == "ramsey-min-dim") outputs = experiments::ramsey_min_dim(spec);
    else if (spec.experiment == "ext-axiom") outputs = experiments::ext_axiom(spec);
    else if (spec.experiment == "find-u") outputs = experiments::find_u(spec);
    else if (spec.experiment == "validate") outputs = experiments::validate_file(spec);
    else {
      std::cerr << "unknown experiment: " << spec.experiment << "\n";
      return 1;
    }
  } catch (const ResourceError& e) {
    std::cerr << "resource cap: " << e.what() << "\n";
    return 2;
  } catch (const InternalError& e) {
    std::cerr << "internal invariant failure: " << e.what() << "\n";
    return 3;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }

  auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  std::filesystem::path dir(spec.out_dir);
  for (auto& [name, data] : outputs) write_atomic(dir / name, data);

  Json manifest;
  manifest["tool"] = "pregeomzol";
  manifest["version"] = tool_version();
  manifest["spec"] = spec_to_json(spec);
  manifest["spec_hash"] = spec_hash(spec);
  manifest["seed"] = spec.cfg.seed;
  manifest["wall_ms"] = wall_ms;
  Json files = Json::array();
  for (auto& [name, data] : outputs)
    files.push_back({{"name", name}, {"bytes", data.size()}});
  manifest["outputs"] = files;
  write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

  for (auto& [name, data] : outputs)
    std::cout << "wrote " << (dir / name).string() << " (" << data.size() << " bytes)\n";
  return 0;
}

}  // namespace pregeomzol
