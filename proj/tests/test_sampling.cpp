#include <doctest.h>

#include <map>
#include <set>

#include "pregeomzol/sampling.hpp"
#include "pregeomzol/serialize.hpp"

using namespace pregeomzol;

namespace {

SamplerConfig anchor_config() {
  SamplerConfig cfg;
  cfg.kind = Kind::Linear;
  cfg.q = 2;
  cfg.n = 2;
  cfg.l = 2;
  cfg.seed = 20240917;
  return cfg;
}

}  // namespace

TEST_CASE("rng streams are deterministic and well spread") {
  RngStream a(stream_key(1, 0, 0)), b(stream_key(1, 0, 0)), c(stream_key(1, 0, 1));
  for (int i = 0; i < 100; ++i) CHECK(a.gen.next() == b.gen.next());
  bool differs = false;
  RngStream a2(stream_key(1, 0, 0));
  for (int i = 0; i < 100; ++i) differs |= a2.gen.next() != c.gen.next();
  CHECK(differs);

  // bounded draws stay in range and hit every value
  RngStream r(stream_key(9, 0, 0));
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t v = r.bounded(3);
    CHECK(v < 3);
    seen.insert(v);
  }
  CHECK(seen.size() == 3);
}

TEST_CASE("exact measure reproduces the worked small instance") {
  auto pg = Pregeometry::linear(2, 2);
  auto m = exact_measure(pg, binary_vocab(), 2, false);
  CHECK(m.atoms.size() == 386);
  CHECK(m.total() == Rational(1, 1));

  RelStructure S(pg, binary_vocab());
  FlatPartition fp = FlatPartition::of(S);
  ColouredStructure mono = with_colouring(S, fp, {1, 1, 1}, 2);
  CHECK(m.of(mono) == Rational(1, 8));

  // colouring marginal: exactly 8 atoms of probability 1/8
  std::map<std::string, Rational> marginal;
  for (std::size_t i = 0; i < m.atoms.size(); ++i) {
    std::string k = reduct_key(m.atoms[i], 1);
    auto it = marginal.find(k);
    if (it == marginal.end()) marginal.emplace(k, m.probability[i]);
    else it->second = it->second.plus(m.probability[i]);
  }
  CHECK(marginal.size() == 8);
  for (auto& [k, p] : marginal) CHECK(p == Rational(1, 8));
}

TEST_CASE("inductive construction equals the product form in every mode") {
  auto pg = Pregeometry::linear(2, 2);
  for (bool symmetric : {false, true})
    for (ColourRule rule : {ColourRule::Closure, ColourRule::Tuple})
      for (bool strong : {false, true}) {
        Vocabulary vocab = binary_vocab(symmetric);
        auto m = exact_measure(pg, vocab, 2, strong, rule);
        CHECK(m.total() == Rational(1, 1));
        for (std::size_t i = 0; i < m.atoms.size(); ++i)
          CHECK(m.probability[i] == product_form_measure(m.atoms[i], rule, strong));
      }
  // the worked example's count shows up in tuple + symmetric mode
  CHECK(exact_measure(pg, binary_vocab(true), 2, false, ColourRule::Tuple).atoms.size() == 26);
}

TEST_CASE("sampled structures always validate; monochromatic draws have no relations") {
  SamplerConfig cfg = anchor_config();
  cfg.samples = 3000;
  Sampler sampler(cfg);
  for (std::uint64_t i = 0; i < cfg.samples; ++i) {
    ColouredStructure M = sampler.draw(i);
    CHECK(validate(M, cfg.strong, cfg.rule).empty());
    std::set<int> cols;
    for (Point p : M.base.universe)
      if (M.colour_of(p) != 0) cols.insert(M.colour_of(p));
    if (cols.size() <= 1) CHECK(M.base.relations_empty());
  }
}

TEST_CASE("sampler reproducibility: equal configs give byte-identical streams") {
  SamplerConfig cfg = anchor_config();
  Sampler a(cfg), b(cfg);
  std::string sa, sb;
  for (std::uint64_t i = 0; i < 200; ++i) {
    sa += coloured_to_json(a.draw(i)).dump();
    sb += coloured_to_json(b.draw(i)).dump();
  }
  CHECK(sa == sb);
}

TEST_CASE("colouring marginal is uniform (chi-square at fixed seed)") {
  SamplerConfig cfg = anchor_config();
  cfg.samples = 100000;
  Sampler sampler(cfg);
  std::map<std::string, std::uint64_t> counts;
  for (std::uint64_t i = 0; i < cfg.samples; ++i)
    counts[reduct_key(sampler.draw(i), 1)]++;
  REQUIRE(counts.size() == 8);
  double expected = cfg.samples / 8.0;
  double chi2 = 0;
  for (auto& [k, c] : counts) {
    double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  // p > 0.001 at 7 degrees of freedom
  CHECK(chi2 < 24.322);
}

TEST_CASE("sampler matches the exact measure: TV distance and coin fairness") {
  // the worked example counts structures in symmetric mode
  SamplerConfig cfg = anchor_config();
  cfg.vocab = binary_vocab(true);
  cfg.samples = 100000;
  Pregeometry pg = Pregeometry::family_member(cfg.kind, cfg.q, cfg.n);
  auto m = exact_measure(pg, cfg.vocab, cfg.l, cfg.strong, cfg.rule);
  Sampler sampler(cfg);

  std::map<std::string, std::uint64_t> emp;
  std::map<std::string, std::map<Tuple, std::uint64_t>> tuple_counts;
  std::map<std::string, std::uint64_t> colouring_counts;
  for (std::uint64_t i = 0; i < cfg.samples; ++i) {
    ColouredStructure M = sampler.draw(i);
    emp[reduct_key(M, 2)]++;
    std::string ck = reduct_key(M, 1);
    colouring_counts[ck]++;
    for (const Tuple& t : M.base.rels[0]) tuple_counts[ck][t]++;
  }

  double tv = 0;
  std::uint64_t seen_mass = 0;
  for (std::size_t i = 0; i < m.atoms.size(); ++i) {
    std::string k = reduct_key(m.atoms[i], 2);
    std::uint64_t c = emp.count(k) ? emp[k] : 0;
    seen_mass += c;
    tv += std::abs(static_cast<double>(c) / cfg.samples - m.probability[i].value());
  }
  CHECK(seen_mass == cfg.samples);  // every sample is a measure atom
  tv /= 2;
  CHECK(tv < 0.02);

  // conditional inclusion frequency of each admissible tuple is a fair coin
  for (std::size_t i = 0; i < m.atoms.size(); ++i) {
    const ColouredStructure& M = m.atoms[i];
    std::string ck = reduct_key(M, 1);
    if (!colouring_counts.count(ck)) continue;
    std::uint64_t denom = colouring_counts[ck];
    if (denom < 1000) continue;
    detail::for_each_candidate(RelStructure(M.base.pg, M.base.universe, M.base.vocab), 0,
                               [&](const Tuple& t) {
                                 if (!tuple_admissible(M, t, cfg.strong, cfg.rule)) return;
                                 double freq =
                                     static_cast<double>(tuple_counts[ck][t]) / denom;
                                 CHECK(freq > 0.49);
                                 CHECK(freq < 0.51);
                               });
  }
}

TEST_CASE("estimate_probability") {
  SamplerConfig cfg = anchor_config();
  cfg.samples = 500;

  Estimate tautology = estimate_probability(cfg, "tautology", [](const ColouredStructure&) {
    return Truth::True;
  });
  CHECK(tautology.estimate == 1.0);
  CHECK(tautology.budget_exceeded == 0);

  // strong with l below the 2-flat count: no tuple is ever admissible
  SamplerConfig strong = cfg;
  strong.strong = true;
  Estimate never = estimate_probability(strong, "relations_nonempty",
                                        [](const ColouredStructure& M) {
                                          return truth_of(!M.base.relations_empty());
                                        });
  CHECK(never.estimate == 0.0);

  // budget-exceeded samples are counted separately
  Estimate budget = estimate_probability(cfg, "budget", [](const ColouredStructure& M) {
    EvalBudget tiny(1, 1);
    return evaluate(M.base, f_forall("x", f_forall("y", f_eq("x", "y"))), {}, tiny);
  });
  CHECK(budget.budget_exceeded == cfg.samples);

  auto [lo, hi] = wilson_interval(50, 100);
  CHECK(lo > 0.40);
  CHECK(hi < 0.60);
  CHECK(lo < 0.5);
  CHECK(hi > 0.5);
  auto [lo0, hi0] = wilson_interval(0, 100);
  CHECK(lo0 < 1e-12);
  CHECK(hi0 < 0.05);
}
