#pragma once

#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "pregeomzol/formula.hpp"
#include "pregeomzol/structures.hpp"

namespace pregeomzol {

// ---------------------------------------------------------------------------
// Pseudorandom source: splitmix64 in hierarchical counter mode. A stream is
// keyed by (run seed, worker index, sample index); equal keys give equal
// streams, so sampling is reproducible and embarrassingly parallel.

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t worker,
                                std::uint64_t index) {
  return mix64(mix64(mix64(seed) ^ (worker + 0x243F6A8885A308D3ull)) ^
               (index + 0x13198A2E03707344ull));
}

struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t s) : state(s) {}
  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

struct RngStream {
  SplitMix64 gen;
  explicit RngStream(std::uint64_t key) : gen(key) {}

  // exactly uniform on [0, n) via rejection
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = gen.next();
      if (r >= threshold) return r % n;
    }
  }

  bool coin() { return (gen.next() >> 63) != 0; }
};

// ---------------------------------------------------------------------------

struct SamplerConfig {
  Kind kind = Kind::Linear;
  unsigned q = 2;
  unsigned n = 2;  // family index; see Pregeometry::family_member
  Vocabulary vocab = binary_vocab();
  unsigned l = 2;
  bool strong = false;
  ColourRule rule = ColourRule::Closure;
  std::uint64_t seed = 1;
  std::uint64_t samples = 1000;
};

namespace detail {

// candidate tuples streamed in canonical order: symbols in vocabulary order,
// entries odometer-ascending (strictly increasing in symmetric mode); only
// tuples of closure rank >= 2 reach fn.
inline void for_each_candidate(const RelStructure& S, unsigned sym,
                               const std::function<void(const Tuple&)>& fn) {
  const unsigned arity = S.vocab.symbols[sym].arity;
  Tuple t(arity);
  std::function<void(unsigned, std::size_t)> rec = [&](unsigned pos, std::size_t start) {
    if (pos == arity) {
      if (S.pg.rank_of(t) >= 2) fn(t);
      return;
    }
    if (S.vocab.symmetric_irreflexive) {
      for (std::size_t i = start; i < S.universe.size(); ++i) {
        t[pos] = S.universe[i];
        rec(pos + 1, i + 1);
      }
    } else {
      for (std::size_t i = 0; i < S.universe.size(); ++i) {
        t[pos] = S.universe[i];
        rec(pos + 1, 0);
      }
    }
  };
  rec(0, 0);
}

}  // namespace detail

// Two-stage sampler for the dimension conditional measure: stage 1 colours
// every rank-1 flat independently and uniformly, stage 2 includes each
// admissible tuple with an independent fair coin (one coin per stored
// orbit representative in symmetric mode). Coins are consumed only for
// admissible tuples, in the canonical candidate order.
class Sampler {
 public:
  explicit Sampler(SamplerConfig cfg)
      : cfg_(std::move(cfg)),
        pg_(Pregeometry::family_member(cfg_.kind, cfg_.q, cfg_.n)),
        empty_(pg_, cfg_.vocab),
        fp_(FlatPartition::of(empty_)) {}

  const SamplerConfig& config() const { return cfg_; }
  const Pregeometry& pg() const { return pg_; }
  const FlatPartition& flats() const { return fp_; }

  ColouredStructure draw(std::uint64_t index, std::uint64_t worker = 0) const {
    RngStream rng(stream_key(cfg_.seed, worker, index));
    std::vector<int> gamma(fp_.flats.size());
    for (std::size_t i = 0; i < gamma.size(); ++i)
      gamma[i] = 1 + static_cast<int>(rng.bounded(cfg_.l));
    ColouredStructure M = with_colouring(empty_, fp_, gamma, cfg_.l);
    for (unsigned s = 0; s < cfg_.vocab.symbols.size(); ++s)
      detail::for_each_candidate(empty_, s, [&](const Tuple& t) {
        if (tuple_admissible(M, t, cfg_.strong, cfg_.rule) && rng.coin())
          M.base.rels[s].insert(t);
      });
    return M;
  }

  RelStructure draw_colourable(std::uint64_t index, std::uint64_t worker = 0) const {
    return forget_colours(draw(index, worker));
  }

 private:
  SamplerConfig cfg_;
  Pregeometry pg_;
  RelStructure empty_;
  FlatPartition fp_;
};

inline ColouredStructure sample_coloured(const SamplerConfig& cfg, std::uint64_t index,
                                         std::uint64_t worker = 0) {
  return Sampler(cfg).draw(index, worker);
}

inline RelStructure sample_colourable(const SamplerConfig& cfg, std::uint64_t index,
                                      std::uint64_t worker = 0) {
  return Sampler(cfg).draw_colourable(index, worker);
}

// ---------------------------------------------------------------------------
// Exact measure at tiny scale, in exact rational arithmetic

struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n, long long d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw InternalError("rational with zero denominator");
    if (den < 0) { num = -num; den = -den; }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
  }

  Rational div_by(std::uint64_t k) const {
    if (k == 0) throw InternalError("division by zero");
    __int128 d = static_cast<__int128>(den) * static_cast<__int128>(k);
    if (d > static_cast<__int128>(0x7FFFFFFFFFFFFFFFll))
      throw ResourceError("rational denominator overflow");
    return Rational(num, static_cast<long long>(d));
  }

  Rational plus(const Rational& o) const {
    __int128 n = static_cast<__int128>(num) * o.den + static_cast<__int128>(o.num) * den;
    __int128 d = static_cast<__int128>(den) * o.den;
    __int128 g = [](__int128 a, __int128 b) {
      if (a < 0) a = -a;
      while (b != 0) { __int128 t = a % b; a = b; b = t; }
      return a == 0 ? 1 : a;
    }(n, d);
    n /= g; d /= g;
    if (d > static_cast<__int128>(0x7FFFFFFFFFFFFFFFll) || n > static_cast<__int128>(0x7FFFFFFFFFFFFFFFll) ||
        n < -static_cast<__int128>(0x7FFFFFFFFFFFFFFFll))
      throw ResourceError("rational overflow");
    return Rational(static_cast<long long>(n), static_cast<long long>(d));
  }

  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// canonical key of the r-dimensional reduct, for grouping
inline std::string reduct_key(const ColouredStructure& M, unsigned r) {
  std::string key;
  key.reserve(64);
  if (r >= 1)
    for (int c : M.colour) key += static_cast<char>('0' + c);
  key += '|';
  for (unsigned s = 0; s < M.base.vocab.symbols.size(); ++s) {
    key += ';';
    for (const Tuple& t : M.base.rels[s])
      if (M.base.pg.rank_of(t) <= r) {
        for (Point p : t) {
          key += std::to_string(p);
          key += ',';
        }
        key += '/';
      }
  }
  return key;
}

struct ExactMeasure {
  std::vector<ColouredStructure> atoms;
  std::vector<Rational> probability;  // aligned with atoms

  const Rational& of(const ColouredStructure& M) const {
    for (std::size_t i = 0; i < atoms.size(); ++i)
      if (atoms[i] == M) return probability[i];
    throw std::invalid_argument("structure not in the measure's support");
  }

  Rational total() const {
    Rational t(0, 1);
    for (const Rational& p : probability) t = t.plus(p);
    return t;
  }
};

// The inductive r-reduct construction, literally: uniform on the 0-reduct,
// then conditional-uniform refinement one dimension at a time up to the
// maximal arity.
inline ExactMeasure exact_measure(const Pregeometry& pg, const Vocabulary& vocab,
                                  unsigned l, bool strong,
                                  ColourRule rule = ColourRule::Closure,
                                  std::uint64_t cap = 1u << 20) {
  ExactMeasure m;
  m.atoms = enumerate_coloured(pg, vocab, l, strong, rule, cap);
  const unsigned rho = vocab.max_arity();

  std::map<std::string, Rational> p_prev;
  for (const ColouredStructure& M : m.atoms) p_prev[reduct_key(M, 0)] = Rational(1, 1);
  if (p_prev.size() != 1) throw InternalError("0-reducts are not unique");

  for (unsigned r = 1; r <= rho; ++r) {
    std::map<std::string, std::set<std::string>> children;
    for (const ColouredStructure& M : m.atoms)
      children[reduct_key(M, r - 1)].insert(reduct_key(M, r));
    std::map<std::string, Rational> p_cur;
    for (auto& [parent, kids] : children)
      for (const std::string& kid : kids)
        p_cur[kid] = p_prev.at(parent).div_by(kids.size());
    p_prev = std::move(p_cur);
  }

  m.probability.reserve(m.atoms.size());
  for (const ColouredStructure& M : m.atoms)
    m.probability.push_back(p_prev.at(reduct_key(M, rho)));
  return m;
}

// product characterisation: 1 / (#colourings * 2^(admissible tuples under
// the structure's colouring))
inline Rational product_form_measure(const ColouredStructure& M, ColourRule rule,
                                     bool strong) {
  FlatPartition fp = FlatPartition::of(M.base);
  std::uint64_t colourings = 1;
  for (std::size_t i = 0; i < fp.flats.size(); ++i) colourings *= M.l;
  std::uint64_t adm = 0;
  for (unsigned s = 0; s < M.base.vocab.symbols.size(); ++s)
    detail::for_each_candidate(RelStructure(M.base.pg, M.base.universe, M.base.vocab),
                               s, [&](const Tuple& t) {
                                 if (tuple_admissible(M, t, strong, rule)) ++adm;
                               });
  Rational r(1, 1);
  r = r.div_by(colourings);
  for (std::uint64_t i = 0; i < adm; ++i) r = r.div_by(2);
  return r;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimation

struct Estimate {
  std::string event;
  unsigned n = 0;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t budget_exceeded = 0;
  std::uint64_t seed = 0;
};

inline std::pair<double, double> wilson_interval(std::uint64_t successes,
                                                 std::uint64_t trials) {
  if (trials == 0) return {0.0, 1.0};
  const double z = 1.959963984540054;  // 95%
  const double nd = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nd;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nd;
  const double centre = (p + z2 / (2.0 * nd)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

// Three-valued event so per-sample budget exhaustion is counted, not hidden.
// Undecided samples are excluded from the estimate and reported.
inline Estimate estimate_probability(const SamplerConfig& cfg, const std::string& name,
                                     const std::function<Truth(const ColouredStructure&)>& event) {
  Sampler sampler(cfg);
  std::uint64_t successes = 0, undecided = 0;
  for (std::uint64_t i = 0; i < cfg.samples; ++i) {
    Truth t = event(sampler.draw(i));
    if (t == Truth::True) ++successes;
    else if (t == Truth::Budget) ++undecided;
  }
  const std::uint64_t decided = cfg.samples - undecided;
  Estimate e;
  e.event = name;
  e.n = cfg.n;
  e.samples = cfg.samples;
  e.budget_exceeded = undecided;
  e.seed = cfg.seed;
  e.estimate = decided == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(decided);
  auto [lo, hi] = wilson_interval(successes, decided);
  e.ci_lo = lo;
  e.ci_hi = hi;
  return e;
}

}  // namespace pregeomzol
