#pragma once

#include <climits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include "pregeomzol/pregeometry.hpp"

namespace pregeomzol {

// Which reading of the multichromatic condition applies to related tuples:
// Closure looks at the rank-1 flats of the tuple's closure (the normative
// definition), Tuple looks at the coloured entries of the tuple itself.
enum class ColourRule { Closure, Tuple };

inline const char* colour_rule_name(ColourRule r) {
  return r == ColourRule::Closure ? "closure" : "tuple";
}

inline ColourRule colour_rule_from_name(const std::string& s) {
  if (s == "closure") return ColourRule::Closure;
  if (s == "tuple") return ColourRule::Tuple;
  throw std::invalid_argument("unknown colour rule: " + s);
}

struct RelSymbol {
  std::string name;
  unsigned arity = 2;
};

struct Vocabulary {
  std::vector<RelSymbol> symbols;
  bool symmetric_irreflexive = false;

  Vocabulary() = default;
  Vocabulary(std::vector<RelSymbol> syms, bool sym_irr = false)
      : symbols(std::move(syms)), symmetric_irreflexive(sym_irr) {
    for (const RelSymbol& s : symbols)
      if (s.arity < 2) throw std::invalid_argument("relation arity must be >= 2");
    if (symbols.empty()) throw std::invalid_argument("vocabulary must be nonempty");
  }

  unsigned max_arity() const {
    unsigned m = 0;
    for (const RelSymbol& s : symbols) m = std::max(m, s.arity);
    return m;
  }

  // index of the first symbol of minimal arity; formula builders
  // designate it as R_1
  unsigned min_arity_symbol() const {
    unsigned best = 0;
    for (unsigned i = 1; i < symbols.size(); ++i)
      if (symbols[i].arity < symbols[best].arity) best = i;
    return best;
  }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < symbols.size(); ++i)
      if (symbols[i].name == name) return static_cast<int>(i);
    return -1;
  }

  bool operator==(const Vocabulary& o) const {
    if (symmetric_irreflexive != o.symmetric_irreflexive) return false;
    if (symbols.size() != o.symbols.size()) return false;
    for (std::size_t i = 0; i < symbols.size(); ++i)
      if (symbols[i].name != o.symbols[i].name || symbols[i].arity != o.symbols[i].arity)
        return false;
    return true;
  }
};

inline Vocabulary binary_vocab(bool symmetric_irreflexive = false) {
  return Vocabulary({{"R", 2}}, symmetric_irreflexive);
}

// L_rel structure: a closed subset of an ambient pregeometry plus relation
// interpretations. In symmetric_irreflexive mode a stored tuple is the
// ascending orbit representative and queries expand it.
class RelStructure {
 public:
  Pregeometry pg;
  PointSet universe;  // sorted; must be closed in pg
  Vocabulary vocab;
  std::vector<std::set<Tuple>> rels;

  RelStructure(Pregeometry pg_, Vocabulary vocab_)
      : pg(std::move(pg_)), vocab(std::move(vocab_)) {
    universe.resize(pg.universe_size());
    for (std::size_t i = 0; i < universe.size(); ++i)
      universe[i] = static_cast<Point>(i);
    rels.resize(vocab.symbols.size());
  }

  RelStructure(Pregeometry pg_, PointSet universe_, Vocabulary vocab_)
      : pg(std::move(pg_)), universe(std::move(universe_)), vocab(std::move(vocab_)) {
    rels.resize(vocab.symbols.size());
  }

  unsigned dim() const { return pg.rank_of(Tuple(universe.begin(), universe.end())); }

  PointSet closure_of_empty() const { return pg.closure_of_empty(); }

  // canonical storage form for a tuple; nullopt if it cannot hold
  std::optional<Tuple> canonical(const Tuple& t) const {
    if (!vocab.symmetric_irreflexive) return t;
    Tuple s = t;
    std::sort(s.begin(), s.end());
    for (std::size_t i = 1; i < s.size(); ++i)
      if (s[i] == s[i - 1]) return std::nullopt;  // irreflexive
    return s;
  }

  bool holds(unsigned sym, const Tuple& t) const {
    if (t.size() != vocab.symbols[sym].arity) return false;
    auto c = canonical(t);
    return c && rels[sym].count(*c) > 0;
  }

  void add_tuple(unsigned sym, const Tuple& t) {
    if (t.size() != vocab.symbols[sym].arity)
      throw std::invalid_argument("tuple arity mismatch");
    for (Point p : t)
      if (!contains_point(universe, p))
        throw std::invalid_argument("tuple point outside universe");
    auto c = canonical(t);
    if (!c)
      throw std::invalid_argument("tuple with repeated entries in symmetric-irreflexive mode");
    rels[sym].insert(*c);
  }

  std::uint64_t tuple_count() const {
    std::uint64_t n = 0;
    for (const auto& r : rels) n += r.size();
    return n;
  }

  bool relations_empty() const { return tuple_count() == 0; }

  bool operator==(const RelStructure& o) const {
    return pg.same_space(o.pg) && universe == o.universe && vocab == o.vocab &&
           rels == o.rels;
  }
};

// L structure: relations plus a colour on every rank-1 flat of the universe.
// colour[p] is 1..l for points outside closure(empty), 0 otherwise.
class ColouredStructure {
 public:
  RelStructure base;
  unsigned l = 2;
  std::vector<int> colour;  // indexed by ambient point

  ColouredStructure(RelStructure base_, unsigned l_)
      : base(std::move(base_)), l(l_), colour(base.pg.universe_size(), 0) {}

  int colour_of(Point p) const { return colour[p]; }

  // constant on the flat of p; p must lie outside closure(empty)
  void set_flat_colour(Point p, int c) {
    if (c < 1 || static_cast<unsigned>(c) > l)
      throw std::invalid_argument("colour out of range");
    PointSet cl0 = base.pg.closure_of_empty();
    if (contains_point(cl0, p))
      throw std::invalid_argument("cannot colour a point in closure(empty)");
    for (Point m : base.pg.closure({p}))
      if (!contains_point(cl0, m)) colour[m] = c;
  }

  bool operator==(const ColouredStructure& o) const {
    return l == o.l && base == o.base && colour == o.colour;
  }
};

// rank-1 flats of a universe plus the point -> flat index lookup
struct FlatPartition {
  std::vector<Flat> flats;
  std::vector<int> flat_of_point;  // -1 for closure(empty) / outside universe

  static FlatPartition of(const Pregeometry& pg, const PointSet& universe) {
    FlatPartition fp;
    fp.flats = pg.one_dim_flats_within(universe);
    fp.flat_of_point.assign(pg.universe_size(), -1);
    PointSet cl0 = pg.closure_of_empty();
    for (std::size_t i = 0; i < fp.flats.size(); ++i)
      for (Point m : fp.flats[i].members)
        if (!contains_point(cl0, m)) fp.flat_of_point[m] = static_cast<int>(i);
    return fp;
  }

  static FlatPartition of(const RelStructure& s) { return of(s.pg, s.universe); }
};

struct Violation {
  int condition = 0;  // 1..5 as in the colouring definition
  Tuple points;
  std::string note;
};

namespace detail {

// colours met by the rank-1 flats inside the closure of the tuple
inline std::vector<int> closure_flat_colours(const ColouredStructure& M,
                                             const Tuple& t) {
  const Pregeometry& pg = M.base.pg;
  PointSet cl = pg.closure(as_point_set(t));
  PointSet cl0 = pg.closure_of_empty();
  std::vector<bool> seen(pg.universe_size(), false);
  std::vector<int> cols;
  for (Point p : cl) {
    if (seen[p] || contains_point(cl0, p)) continue;
    for (Point m : pg.closure({p})) seen[m] = true;
    cols.push_back(M.colour_of(p));
  }
  return cols;
}

// colour per distinct flat met by the tuple's entries outside closure(empty)
inline std::vector<int> entry_flat_colours(const ColouredStructure& M,
                                           const Tuple& t) {
  const Pregeometry& pg = M.base.pg;
  PointSet cl0 = pg.closure_of_empty();
  std::set<Point> flat_ids;  // minimal member outside closure(empty)
  std::vector<int> cols;
  for (Point p : t) {
    if (contains_point(cl0, p)) continue;
    Point id = p;
    for (Point m : pg.closure({p}))
      if (!contains_point(cl0, m)) { id = m; break; }
    if (flat_ids.insert(id).second) cols.push_back(M.colour_of(p));
  }
  return cols;
}

inline bool at_least_two_colours(const std::vector<int>& cols) {
  for (std::size_t i = 1; i < cols.size(); ++i)
    if (cols[i] != cols[0]) return true;
  return false;
}

inline bool pairwise_distinct(std::vector<int> cols) {
  std::sort(cols.begin(), cols.end());
  for (std::size_t i = 1; i < cols.size(); ++i)
    if (cols[i] == cols[i - 1]) return false;
  return true;
}

}  // namespace detail

// Admissibility of a related tuple under a total colouring: the weak clause
// requires the relevant flats to carry at least two colours, the strong
// clause requires pairwise distinct colours.
inline bool tuple_admissible(const ColouredStructure& M, const Tuple& t,
                             bool strong, ColourRule rule) {
  std::vector<int> cols = rule == ColourRule::Closure
                              ? detail::closure_flat_colours(M, t)
                              : detail::entry_flat_colours(M, t);
  if (!detail::at_least_two_colours(cols)) return false;
  if (strong && !detail::pairwise_distinct(cols)) return false;
  return true;
}

// Conditions (1)-(5) of the colouring definition. Violations are data, not
// errors; an empty list means M is (strongly) l-coloured.
inline std::vector<Violation> validate(const ColouredStructure& M, bool strong,
                                       ColourRule rule = ColourRule::Closure) {
  std::vector<Violation> out;
  const Pregeometry& pg = M.base.pg;
  PointSet cl0 = pg.closure_of_empty();

  for (Point p : M.base.universe) {
    bool in0 = contains_point(cl0, p);
    int c = M.colour_of(p);
    if (in0 && c != 0)
      out.push_back({1, {p}, "point in closure(empty) has a colour"});
    if (!in0 && (c < 1 || static_cast<unsigned>(c) > M.l))
      out.push_back({1, {p}, "point outside closure(empty) lacks a colour"});
  }
  for (Point p : M.base.universe) {
    if (contains_point(cl0, p)) continue;
    for (Point m : pg.closure({p}))
      if (!contains_point(cl0, m) && M.colour_of(m) != M.colour_of(p)) {
        out.push_back({3, {p, m}, "dependent points with different colours"});
        break;
      }
  }
  for (unsigned s = 0; s < M.base.vocab.symbols.size(); ++s) {
    for (const Tuple& t : M.base.rels[s]) {
      bool all0 = true;
      for (Point p : t)
        if (!contains_point(cl0, p)) { all0 = false; break; }
      if (all0) {
        out.push_back({2, t, "related tuple inside closure(empty)"});
        continue;
      }
      std::vector<int> cols = rule == ColourRule::Closure
                                  ? detail::closure_flat_colours(M, t)
                                  : detail::entry_flat_colours(M, t);
      if (!detail::at_least_two_colours(cols))
        out.push_back({4, t, "related tuple without two colours"});
      else if (strong && !detail::pairwise_distinct(cols))
        out.push_back({5, t, "independent points of a related tuple share a colour"});
    }
  }
  return out;
}

inline ColouredStructure with_colouring(const RelStructure& S,
                                        const FlatPartition& fp,
                                        const std::vector<int>& gamma,
                                        unsigned l) {
  if (gamma.size() != fp.flats.size())
    throw std::invalid_argument("colouring does not cover every rank-1 flat");
  ColouredStructure M(S, l);
  PointSet cl0 = S.pg.closure_of_empty();
  for (std::size_t i = 0; i < fp.flats.size(); ++i) {
    if (gamma[i] < 1 || static_cast<unsigned>(gamma[i]) > l)
      throw std::invalid_argument("colour value out of range");
    for (Point m : fp.flats[i].members)
      if (!contains_point(cl0, m)) M.colour[m] = gamma[i];
  }
  return M;
}

// gamma is indexed by the flats of FlatPartition::of(S).
inline bool validate_colouring_fn(const RelStructure& S,
                                  const std::vector<int>& gamma, unsigned l,
                                  bool strong,
                                  ColourRule rule = ColourRule::Closure) {
  FlatPartition fp = FlatPartition::of(S);
  ColouredStructure M = with_colouring(S, fp, gamma, l);
  return validate(M, strong, rule).empty();
}

// d-dimensional reduct: colours kept iff their point has dimension <= d
// (so iff d >= 1), relation tuples kept iff their closure has rank <= d.
inline ColouredStructure reduct_dim(const ColouredStructure& M, unsigned d) {
  ColouredStructure out(RelStructure(M.base.pg, M.base.universe, M.base.vocab), M.l);
  if (d >= 1) out.colour = M.colour;
  for (unsigned s = 0; s < M.base.vocab.symbols.size(); ++s)
    for (const Tuple& t : M.base.rels[s])
      if (M.base.pg.rank_of(t) <= d) out.base.rels[s].insert(t);
  return out;
}

inline RelStructure forget_colours(const ColouredStructure& M) { return M.base; }

inline ColouredStructure closed_substructure(const ColouredStructure& M,
                                             const PointSet& f) {
  if (M.base.pg.closure(f) != f)
    throw std::invalid_argument("closed_substructure: set is not closed");
  ColouredStructure out(RelStructure(M.base.pg, f, M.base.vocab), M.l);
  for (Point p : f) out.colour[p] = M.colour[p];
  for (unsigned s = 0; s < M.base.vocab.symbols.size(); ++s)
    for (const Tuple& t : M.base.rels[s]) {
      bool inside = true;
      for (Point p : t)
        if (!contains_point(f, p)) { inside = false; break; }
      if (inside) out.base.rels[s].insert(t);
    }
  return out;
}

inline RelStructure closed_substructure(const RelStructure& M, const PointSet& f) {
  if (M.pg.closure(f) != f)
    throw std::invalid_argument("closed_substructure: set is not closed");
  RelStructure out(M.pg, f, M.vocab);
  for (unsigned s = 0; s < M.vocab.symbols.size(); ++s)
    for (const Tuple& t : M.rels[s]) {
      bool inside = true;
      for (Point p : t)
        if (!contains_point(f, p)) { inside = false; break; }
      if (inside) out.rels[s].insert(t);
    }
  return out;
}

// The substitution construction: replace M's restriction to the closed set A
// by A_new, keeping every other closed substructure of rank <= rank(A)
// intact. A_new must agree with M on the pregeometry part of A and on all
// proper closed substructures of A.
inline ColouredStructure substitute(const ColouredStructure& M, const PointSet& A,
                                    const ColouredStructure& A_new) {
  const Pregeometry& pg = M.base.pg;
  if (pg.closure(A) != A) throw std::invalid_argument("substitute: A not closed");
  if (!subset_of(A, M.base.universe))
    throw std::invalid_argument("substitute: A outside universe");
  if (!A_new.base.pg.same_space(pg) || A_new.base.universe != A ||
      !(A_new.base.vocab == M.base.vocab) || A_new.l != M.l)
    throw std::invalid_argument("substitute: A_new does not live on A");

  unsigned rank_a = pg.rank_of(Tuple(A.begin(), A.end()));
  PointSet cl0 = pg.closure_of_empty();

  if (rank_a == 0) return M;  // rank-0 structures are unique, so A_new == M|A

  if (rank_a >= 2) {
    // agreement on proper closed substructures: colours on every rank-1 flat
    for (Point p : A)
      if (!contains_point(cl0, p) && A_new.colour_of(p) != M.colour_of(p))
        throw std::invalid_argument("substitute: colour disagreement on a proper flat");
    // relation tuples with closure strictly below A must agree
    for (unsigned s = 0; s < M.base.vocab.symbols.size(); ++s) {
      auto check = [&](const Tuple& t, bool want) {
        bool inside = true;
        for (Point p : t)
          if (!contains_point(A, p)) { inside = false; break; }
        if (!inside) return;
        if (pg.closure(as_point_set(t)) == A) return;
        if ((want ? A_new.base.holds(s, t) : M.base.holds(s, t)) == false)
          throw std::invalid_argument("substitute: relation disagreement below A");
      };
      for (const Tuple& t : M.base.rels[s]) check(t, true);
      for (const Tuple& t : A_new.base.rels[s]) check(t, false);
    }
  }

  ColouredStructure N(RelStructure(pg, M.base.universe, M.base.vocab), M.l);

  if (rank_a == 1) {
    // recolour the flat, drop every relation
    N.colour = M.colour;
    int j = 0;
    for (Point p : A)
      if (!contains_point(cl0, p)) { j = A_new.colour_of(p); break; }
    for (Point p : A)
      if (!contains_point(cl0, p)) N.colour[p] = j;
    return N;
  }

  // rank_a = k+1 >= 2: keep the k-reduct, patch A, drop higher ranks
  N.colour = M.colour;
  for (unsigned s = 0; s < M.base.vocab.symbols.size(); ++s) {
    for (const Tuple& t : M.base.rels[s]) {
      unsigned r = pg.rank_of(t);
      if (r > rank_a) continue;
      if (r == rank_a && pg.closure(as_point_set(t)) == A) continue;
      N.base.rels[s].insert(t);
    }
    for (const Tuple& t : A_new.base.rels[s])
      if (pg.rank_of(t) == rank_a && pg.closure(as_point_set(t)) == A)
        N.base.rels[s].insert(t);
  }
  return N;
}

// ---------------------------------------------------------------------------
// Embeddings

using PointMap = std::vector<std::pair<Point, Point>>;  // sorted by source

namespace detail {

inline const RelStructure& rel_part(const RelStructure& s) { return s; }
inline const RelStructure& rel_part(const ColouredStructure& s) { return s.base; }

inline std::optional<Point> map_lookup(const PointMap& m, Point p) {
  auto it = std::lower_bound(m.begin(), m.end(), std::make_pair(p, Point(0)));
  if (it != m.end() && it->first == p) return it->second;
  return std::nullopt;
}

// relation/colour preservation of f restricted to its domain, both directions
template <typename SA, typename SM>
bool map_respects(const SA& A, const SM& M, const PointMap& f) {
  const RelStructure& ra = rel_part(A);
  const RelStructure& rm = rel_part(M);
  PointSet image;
  for (auto& [s, d] : f) image.push_back(d);
  sort_unique(image);
  for (unsigned s = 0; s < ra.vocab.symbols.size(); ++s) {
    for (const Tuple& t : ra.rels[s]) {
      bool in_domain = true;
      Tuple ft;
      for (Point p : t) {
        auto d = map_lookup(f, p);
        if (!d) { in_domain = false; break; }
        ft.push_back(*d);
      }
      if (in_domain && !rm.holds(s, ft)) return false;
    }
    for (const Tuple& t : rm.rels[s]) {
      bool in_image = true;
      for (Point p : t)
        if (!contains_point(image, p)) { in_image = false; break; }
      if (!in_image) continue;
      Tuple pre;
      for (Point p : t) {
        for (auto& [src, dst] : f)
          if (dst == p) { pre.push_back(src); break; }
      }
      if (pre.size() == t.size() && !ra.holds(s, pre)) return false;
    }
  }
  if constexpr (std::is_same_v<SA, ColouredStructure> &&
                std::is_same_v<SM, ColouredStructure>) {
    for (auto& [s, d] : f)
      if (A.colour_of(s) != M.colour_of(d)) return false;
  }
  return true;
}

}  // namespace detail

// All embeddings of A into M: injections preserving the closure predicates
// (both directions), relations (both directions) and, when both structures
// are coloured, the colours. `fixed` pins images of some points in advance.
template <typename SA, typename SM>
std::vector<PointMap> find_embeddings(const SA& A, const SM& M,
                                      bool require_closed_image = false,
                                      std::size_t limit = SIZE_MAX,
                                      const PointMap& fixed = {}) {
  const RelStructure& ra = detail::rel_part(A);
  const RelStructure& rm = detail::rel_part(M);
  std::vector<PointMap> result;
  if (!(ra.vocab == rm.vocab) || !ra.pg.same_family(rm.pg)) return result;

  // basis preferring fixed-domain points, so a seeded search stays seeded
  PointSet pool;
  for (auto& [s, d] : fixed) pool.push_back(s);
  sort_unique(pool);
  PointSet rest = set_difference(ra.universe, pool);
  PointSet ordered = pool;
  ordered.insert(ordered.end(), rest.begin(), rest.end());
  PointSet basis = ra.pg.greedy_independent(ordered, ra.pg.rank());
  const unsigned r = static_cast<unsigned>(basis.size());

  PointSet cl0m = rm.pg.closure_of_empty();

  Tuple chosen;
  std::function<bool(unsigned)> rec = [&](unsigned i) -> bool {
    if (result.size() >= limit) return true;
    if (i == r) {
      PointMap f = extend_independent_iso(ra.pg, Tuple(basis.begin(), basis.end()),
                                          rm.pg, chosen);
      for (auto& [s, d] : f)
        if (!contains_point(rm.universe, d)) return false;
      if (f.size() != ra.universe.size()) return false;
      for (auto& [s, d] : fixed) {
        auto got = detail::map_lookup(f, s);
        if (!got || *got != d) return false;
      }
      if (!detail::map_respects(A, M, f)) return false;
      if (require_closed_image) {
        PointSet image;
        for (auto& [s, d] : f) image.push_back(d);
        sort_unique(image);
        if (rm.pg.closure(image) != image) return false;
      }
      result.push_back(std::move(f));
      return result.size() >= limit;
    }
    auto pinned = detail::map_lookup(fixed, basis[i]);
    for (Point m : rm.universe) {
      if (pinned && m != *pinned) continue;
      if (contains_point(cl0m, m)) continue;
      Tuple cand = chosen;
      cand.push_back(m);
      if (!rm.pg.is_independent(as_point_set(cand)) ||
          as_point_set(cand).size() != cand.size())
        continue;
      // prune: the partial iso must already respect relations and colours
      PointMap partial = extend_independent_iso(
          ra.pg, Tuple(basis.begin(), basis.begin() + i + 1), rm.pg, cand);
      bool ok = true;
      for (auto& [s, d] : partial)
        if (!contains_point(rm.universe, d)) { ok = false; break; }
      if (ok) {
        // restrict to mapped subdomain and check
        SA sub = [&] {
          PointSet dom;
          for (auto& [s, d] : partial) dom.push_back(s);
          sort_unique(dom);
          return closed_substructure(A, dom);
        }();
        if (!detail::map_respects(sub, M, partial)) ok = false;
      }
      if (ok) {
        chosen.push_back(m);
        bool stop = rec(i + 1);
        chosen.pop_back();
        if (stop) return true;
      }
    }
    return false;
  };
  rec(0);
  return result;
}

template <typename SA, typename SM>
bool is_isomorphic(const SA& A, const SM& M) {
  if (detail::rel_part(A).universe.size() != detail::rel_part(M).universe.size())
    return false;
  return !find_embeddings(A, M, false, 1).empty();
}

// B/A-extension property: every embedding of A into M with closed image
// extends to an embedding of B with closed image. A is given as a closed
// subset of B's universe.
template <typename S>
bool has_extension_property(const S& M, const S& B, const PointSet& A) {
  S a_sub = closed_substructure(B, A);
  auto anchors = find_embeddings(a_sub, M, true);
  for (const PointMap& f : anchors) {
    auto ext = find_embeddings(B, M, true, 1, f);
    if (ext.empty()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration of (strongly) l-coloured structures on a pregeometry

inline std::vector<std::vector<int>> all_colourings(std::size_t flats, unsigned l,
                                                    std::uint64_t cap) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < flats; ++i) {
    total *= l;
    if (total > cap) throw ResourceError("colouring enumeration exceeds cap");
  }
  std::vector<std::vector<int>> out;
  std::vector<int> cur(flats, 1);
  for (std::uint64_t i = 0;; ++i) {
    out.push_back(cur);
    std::size_t j = 0;
    while (j < flats) {
      if (++cur[j] <= static_cast<int>(l)) break;
      cur[j] = 1;
      ++j;
    }
    if (j == flats) break;
  }
  return out;
}

// candidate tuples that could ever be admissible: closure rank >= 2,
// canonical per symmetry mode
inline std::vector<Tuple> candidate_tuples(const RelStructure& S, unsigned sym) {
  const unsigned arity = S.vocab.symbols[sym].arity;
  std::vector<Tuple> out;
  Tuple t(arity);
  std::function<void(unsigned, std::size_t)> rec = [&](unsigned pos, std::size_t start) {
    if (pos == arity) {
      if (S.pg.rank_of(t) >= 2) out.push_back(t);
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
  return out;
}

// All valid (strongly) l-coloured structures on the universe of the given
// empty template structure, exactly once each. Tiny instances only; the cap
// guards the output size.
inline std::vector<ColouredStructure> enumerate_coloured_on(
    const RelStructure& empty, unsigned l, bool strong,
    ColourRule rule = ColourRule::Closure, std::uint64_t cap = 1u << 20) {
  const Vocabulary& vocab = empty.vocab;
  FlatPartition fp = FlatPartition::of(empty);
  std::vector<std::vector<int>> colourings = all_colourings(fp.flats.size(), l, cap);

  std::vector<std::vector<Tuple>> cands(vocab.symbols.size());
  for (unsigned s = 0; s < vocab.symbols.size(); ++s)
    cands[s] = candidate_tuples(empty, s);

  // total count guard before materialising
  std::uint64_t total = 0;
  std::vector<std::vector<std::pair<unsigned, Tuple>>> adm_per_col;
  adm_per_col.reserve(colourings.size());
  for (const auto& gamma : colourings) {
    ColouredStructure probe = with_colouring(empty, fp, gamma, l);
    std::vector<std::pair<unsigned, Tuple>> adm;
    for (unsigned s = 0; s < vocab.symbols.size(); ++s)
      for (const Tuple& t : cands[s])
        if (tuple_admissible(probe, t, strong, rule)) adm.emplace_back(s, t);
    if (adm.size() >= 63) throw ResourceError("enumerate_coloured: too many admissible tuples");
    std::uint64_t here = 1ull << adm.size();
    total += here;
    if (total > cap) throw ResourceError("enumerate_coloured: cap exceeded");
    adm_per_col.push_back(std::move(adm));
  }

  std::vector<ColouredStructure> out;
  out.reserve(total);
  for (std::size_t ci = 0; ci < colourings.size(); ++ci) {
    ColouredStructure base = with_colouring(empty, fp, colourings[ci], l);
    const auto& adm = adm_per_col[ci];
    for (std::uint64_t mask = 0; mask < (1ull << adm.size()); ++mask) {
      ColouredStructure M = base;
      for (std::size_t i = 0; i < adm.size(); ++i)
        if (mask & (1ull << i)) M.base.rels[adm[i].first].insert(adm[i].second);
      out.push_back(std::move(M));
    }
  }
  return out;
}

inline std::vector<ColouredStructure> enumerate_coloured(
    const Pregeometry& pg, const Vocabulary& vocab, unsigned l, bool strong,
    ColourRule rule = ColourRule::Closure, std::uint64_t cap = 1u << 20) {
  return enumerate_coloured_on(RelStructure(pg, vocab), l, strong, rule, cap);
}

// ---------------------------------------------------------------------------
// Catalogs of closed pairs for the k-extension property

struct ClosedPairCatalog {
  // (B, universe of a proper closed substructure A), one per iso type
  std::vector<std::pair<ColouredStructure, PointSet>> pairs;
};

namespace detail {

inline std::string iso_invariant(const ColouredStructure& M) {
  std::string key = std::to_string(M.base.universe.size()) + "#";
  std::vector<int> class_sizes;
  std::map<int, int> by_colour;
  for (Point p : M.base.universe)
    if (M.colour_of(p) != 0) by_colour[M.colour_of(p)]++;
  for (auto& [c, n] : by_colour) class_sizes.push_back(n);
  std::sort(class_sizes.begin(), class_sizes.end());
  for (int n : class_sizes) key += std::to_string(n) + ",";
  key += "#";
  for (const auto& r : M.base.rels) key += std::to_string(r.size()) + ",";
  // per-point profile: (colour, occurrences in relations), sorted
  std::vector<std::pair<int, int>> profile;
  for (Point p : M.base.universe) {
    int occ = 0;
    for (const auto& r : M.base.rels)
      for (const Tuple& t : r)
        occ += static_cast<int>(std::count(t.begin(), t.end(), p));
    profile.emplace_back(M.colour_of(p), occ);
  }
  std::sort(profile.begin(), profile.end());
  key += "#";
  for (auto& [c, o] : profile) key += std::to_string(c) + ":" + std::to_string(o) + ";";
  return key;
}

}  // namespace detail

// Iso-type representatives of closed pairs A properly inside B with
// rank(B) <= k, over one host space per rank (the geometries are
// homogeneous, so one flat per rank suffices). Capped; a breach reports how
// far the catalog got.
inline ClosedPairCatalog build_pair_catalog(Kind kind, unsigned q,
                                            const Vocabulary& vocab, unsigned l,
                                            bool strong, unsigned k,
                                            ColourRule rule = ColourRule::Closure,
                                            std::uint64_t cap = 1u << 16) {
  Pregeometry host = kind == Kind::Trivial
                         ? Pregeometry::trivial(std::max(1u, k))
                         : Pregeometry::family_member(
                               kind, q, kind == Kind::Linear ? std::max(1u, k)
                                                             : (k > 0 ? k - 1 : 0));
  if (host.rank() < k) throw InternalError("pair catalog host too small");
  ClosedPairCatalog catalog;
  for (unsigned r = 1; r <= k; ++r) {
    Flat f = host.flats_of_rank(r).front();
    RelStructure empty(host, f.members, vocab);
    std::vector<ColouredStructure> all = enumerate_coloured_on(empty, l, strong, rule, cap);

    // reduce to iso representatives
    std::map<std::string, std::vector<std::size_t>> buckets;
    std::vector<std::size_t> reps;
    for (std::size_t i = 0; i < all.size(); ++i) {
      std::string key = detail::iso_invariant(all[i]);
      bool fresh = true;
      for (std::size_t j : buckets[key])
        if (is_isomorphic(all[i], all[j])) { fresh = false; break; }
      if (fresh) {
        buckets[key].push_back(i);
        reps.push_back(i);
      }
    }

    for (std::size_t i : reps) {
      const ColouredStructure& B = all[i];
      // proper closed substructures, deduplicated along automorphism orbits
      std::vector<PointMap> autos = find_embeddings(B, B);
      std::vector<PointSet> seen_orbits;
      for (unsigned ar = 0; ar < r; ++ar) {
        for (const Flat& af : host.flats_of_rank_within(ar, f.members)) {
          bool known = false;
          for (const PointMap& aut : autos) {
            PointSet image;
            for (Point p : af.members)
              image.push_back(detail::map_lookup(aut, p).value());
            sort_unique(image);
            if (std::find(seen_orbits.begin(), seen_orbits.end(), image) !=
                seen_orbits.end()) {
              known = true;
              break;
            }
          }
          if (known) continue;
          seen_orbits.push_back(af.members);
          catalog.pairs.emplace_back(B, af.members);
          if (catalog.pairs.size() > cap)
            throw ResourceError("pair catalog cap exceeded at rank " + std::to_string(r) +
                                " with " + std::to_string(catalog.pairs.size()) + " pairs");
        }
      }
    }
  }
  return catalog;
}

// every closed copy of A in M extends to a closed copy of B, for all
// catalogued pairs
inline bool k_extension_property(const ColouredStructure& M, unsigned k,
                                 const ClosedPairCatalog& catalog) {
  for (const auto& [B, A] : catalog.pairs) {
    if (B.base.dim() > k) continue;
    if (!has_extension_property(M, B, A)) return false;
  }
  return true;
}

// counts only, one per (colour-rule, symmetry mode) combination
struct EnumerationCounts {
  std::uint64_t closure_ordered = 0;
  std::uint64_t closure_symmetric = 0;
  std::uint64_t tuple_ordered = 0;
  std::uint64_t tuple_symmetric = 0;
  std::uint64_t colourings = 0;  // |K restricted to 1|
};

inline std::uint64_t count_coloured(const Pregeometry& pg, const Vocabulary& vocab,
                                    unsigned l, bool strong, ColourRule rule,
                                    std::uint64_t cap = 1ull << 40) {
  RelStructure empty(pg, vocab);
  FlatPartition fp = FlatPartition::of(empty);
  std::vector<std::vector<int>> colourings = all_colourings(fp.flats.size(), l, cap);
  std::vector<std::vector<Tuple>> cands(vocab.symbols.size());
  for (unsigned s = 0; s < vocab.symbols.size(); ++s)
    cands[s] = candidate_tuples(empty, s);
  std::uint64_t total = 0;
  for (const auto& gamma : colourings) {
    ColouredStructure probe = with_colouring(empty, fp, gamma, l);
    unsigned adm = 0;
    for (unsigned s = 0; s < vocab.symbols.size(); ++s)
      for (const Tuple& t : cands[s])
        if (tuple_admissible(probe, t, strong, rule)) ++adm;
    if (adm >= 63) throw ResourceError("count_coloured: too many admissible tuples");
    total += 1ull << adm;
    if (total > cap) throw ResourceError("count_coloured: cap exceeded");
  }
  return total;
}

inline EnumerationCounts enumeration_counts(const Pregeometry& pg,
                                            std::vector<RelSymbol> symbols,
                                            unsigned l, bool strong) {
  EnumerationCounts c;
  Vocabulary ordered(symbols, false), symmetric(symbols, true);
  c.closure_ordered = count_coloured(pg, ordered, l, strong, ColourRule::Closure);
  c.closure_symmetric = count_coloured(pg, symmetric, l, strong, ColourRule::Closure);
  c.tuple_ordered = count_coloured(pg, ordered, l, strong, ColourRule::Tuple);
  c.tuple_symmetric = count_coloured(pg, symmetric, l, strong, ColourRule::Tuple);
  std::uint64_t f = FlatPartition::of(pg, [&] {
                      PointSet all(pg.universe_size());
                      for (std::size_t i = 0; i < all.size(); ++i)
                        all[i] = static_cast<Point>(i);
                      return all;
                    }()).flats.size();
  c.colourings = 1;
  for (std::uint64_t i = 0; i < f; ++i) c.colourings *= l;
  return c;
}

// ---------------------------------------------------------------------------
// Witness structure for the strong-case formula

struct WitnessB {
  ColouredStructure B;
  Point a = 0, b = 0;
  std::vector<Point> v;  // v_2..v_l in order
};

// Builds the strongly l-coloured structure whose R_1 pattern realises the
// existential part of the strong-case formula for the designated pair (a,b).
// S = {a, b, v_2..v_l} plus (t-2) fillers per designated closure; the whole
// ambient space is closure(S).
inline WitnessB build_witness_B_strong(Kind kind, unsigned q, unsigned l,
                                       unsigned r1, unsigned t,
                                       int colour_of_ab = 1) {
  if (l < 2) throw std::invalid_argument("witness: l >= 2 required");
  if (r1 < 2) throw std::invalid_argument("witness: r1 >= 2 required");
  if (t < 2) throw std::invalid_argument("witness: t >= 2 required");
  if (colour_of_ab < 1 || static_cast<unsigned>(colour_of_ab) > l)
    throw std::invalid_argument("witness: colour_of_ab out of range");
  TThreshold th = t_threshold(kind, q, l);
  if (t >= th.table.size() || th.table[t] > l)
    throw std::invalid_argument("witness: rank-t flats have more than l subflats");

  const unsigned fillers = t - 2;
  const unsigned s_size = 2 + (l - 1) + 2 * (l - 1) * fillers +
                          (l - 1) * (l - 2) / 2 * fillers;
  Pregeometry pg = kind == Kind::Trivial
                       ? Pregeometry::trivial(s_size)
                       : Pregeometry::family_member(kind, q, kind == Kind::Linear
                                                                ? s_size
                                                                : s_size - 1);
  if (pg.rank() != s_size) throw InternalError("witness: ambient rank mismatch");

  PointSet all(pg.universe_size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Point>(i);
  PointSet indep = pg.greedy_independent(all, s_size);
  if (indep.size() < s_size)
    throw std::invalid_argument("witness: family cannot host the required rank");

  std::size_t next = 0;
  auto take = [&] { return indep[next++]; };
  Point a = take(), b = take();
  std::vector<Point> v(l + 1, 0);  // v[2..l]
  for (unsigned i = 2; i <= l; ++i) v[i] = take();
  std::map<std::pair<char, std::pair<unsigned, unsigned>>, Point> u;  // ('a'/'b', (i,j))
  std::map<std::pair<unsigned, std::pair<unsigned, unsigned>>, Point> uk;  // (k, (i,j))
  for (unsigned i = 2; i <= l; ++i)
    for (unsigned j = 1; j <= fillers; ++j) {
      u[{'a', {i, j}}] = take();
      u[{'b', {i, j}}] = take();
    }
  for (unsigned i = 2; i <= l; ++i)
    for (unsigned k = i + 1; k <= l; ++k)
      for (unsigned j = 1; j <= fillers; ++j) uk[{k, {i, j}}] = take();

  Vocabulary vocab({{"R1", r1}}, false);
  ColouredStructure B(RelStructure(pg, vocab), l);

  // colours of the designated flats
  std::vector<int> v_colours;
  for (int c = 1; c <= static_cast<int>(l); ++c)
    if (c != colour_of_ab) v_colours.push_back(c);

  std::vector<int> assigned(pg.universe_size(), 0);  // per flat via points
  PointSet cl0 = pg.closure_of_empty();
  auto paint = [&](Point p, int c) {
    for (Point m : pg.closure({p}))
      if (!contains_point(cl0, m)) {
        if (assigned[m] != 0 && assigned[m] != c)
          throw InternalError("witness: conflicting colour assignment");
        assigned[m] = c;
      }
  };
  paint(a, colour_of_ab);
  paint(b, colour_of_ab);
  for (unsigned i = 2; i <= l; ++i) paint(v[i], v_colours[i - 2]);

  // rank-t designated closures get pairwise distinct flat colours
  auto colour_block = [&](const PointSet& gen) {
    PointSet cl = pg.closure(gen);
    std::vector<bool> seen(pg.universe_size(), false);
    std::vector<Point> reps;
    std::set<int> used;
    for (Point p : cl) {
      if (seen[p] || contains_point(cl0, p)) continue;
      for (Point m : pg.closure({p})) seen[m] = true;
      if (assigned[p] != 0)
        used.insert(assigned[p]);
      else
        reps.push_back(p);
    }
    int c = 1;
    for (Point p : reps) {
      while (used.count(c)) ++c;
      if (c > static_cast<int>(l)) throw InternalError("witness: out of colours");
      paint(p, c);
      used.insert(c);
    }
  };

  auto block_gen = [&](Point x, unsigned i, char tag) {
    PointSet gen{x, v[i]};
    for (unsigned j = 1; j <= fillers; ++j) gen.push_back(u[{tag, {i, j}}]);
    sort_unique(gen);
    return gen;
  };
  auto pair_gen = [&](unsigned k, unsigned i) {
    PointSet gen{v[k], v[i]};
    for (unsigned j = 1; j <= fillers; ++j) gen.push_back(uk[{k, {i, j}}]);
    sort_unique(gen);
    return gen;
  };

  // fillers w for the R_1 tuples: distinct members of the block closure,
  // avoiding the two lead points
  auto pick_w = [&](const PointSet& gen, Point x, Point y) {
    Tuple w;
    if (r1 == 2) return w;
    PointSet cl = pg.closure(gen);
    for (Point p : cl) {
      if (p == x || p == y || contains_point(cl0, p)) continue;
      w.push_back(p);
      if (w.size() == r1 - 2) return w;
    }
    throw std::invalid_argument("witness: block closure too small for arity");
  };

  for (unsigned i = 2; i <= l; ++i) {
    PointSet ga = block_gen(a, i, 'a'), gb = block_gen(b, i, 'b');
    colour_block(ga);
    colour_block(gb);
    Tuple ta{a, v[i]};
    for (Point w : pick_w(ga, a, v[i])) ta.push_back(w);
    Tuple tb{b, v[i]};
    for (Point w : pick_w(gb, b, v[i])) tb.push_back(w);
    B.base.add_tuple(0, ta);
    B.base.add_tuple(0, tb);
  }
  for (unsigned i = 2; i <= l; ++i)
    for (unsigned k = i + 1; k <= l; ++k) {
      PointSet g = pair_gen(k, i);
      colour_block(g);
      Tuple tk{v[k], v[i]};
      for (Point w : pick_w(g, v[k], v[i])) tk.push_back(w);
      B.base.add_tuple(0, tk);
    }

  for (Point p : B.base.universe) {
    if (contains_point(cl0, p)) continue;
    B.colour[p] = assigned[p] != 0 ? assigned[p] : colour_of_ab;
  }

  WitnessB out{std::move(B), a, b, {}};
  for (unsigned i = 2; i <= l; ++i) out.v.push_back(v[i]);
  return out;
}

}  // namespace pregeomzol
