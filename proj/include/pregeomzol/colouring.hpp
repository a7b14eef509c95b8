#pragma once

#include <bit>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "pregeomzol/sampling.hpp"
#include "pregeomzol/structures.hpp"

namespace pregeomzol {

// ---------------------------------------------------------------------------
// Constraint model over rank-1 flats

enum class ConstraintType { NotAllEqual, AllDifferent };

struct ColourConstraint {
  ConstraintType type;
  std::vector<int> flats;  // indices into the flat partition, sorted
  Tuple origin;            // a related tuple that produced the constraint
};

struct ColourCSP {
  FlatPartition flats;
  unsigned l = 2;
  std::vector<ColourConstraint> constraints;
  std::vector<Tuple> unsat_markers;  // tuples no colouring can ever admit

  bool trivially_unsat() const { return !unsat_markers.empty(); }
};

// One constraint per related tuple: NotAllEqual over the relevant flats in
// the weak case, AllDifferent in the strong case. A tuple whose relevant
// flats number fewer than two (or more than l in the strong case) can never
// be admissible and becomes an unsatisfiable-by-definition marker.
inline ColourCSP build_csp(const RelStructure& S, unsigned l, bool strong,
                           ColourRule rule = ColourRule::Closure) {
  ColourCSP csp;
  csp.flats = FlatPartition::of(S);
  csp.l = l;
  std::set<std::pair<int, std::vector<int>>> seen;
  for (unsigned s = 0; s < S.vocab.symbols.size(); ++s) {
    for (const Tuple& t : S.rels[s]) {
      std::set<int> fset;
      if (rule == ColourRule::Closure) {
        for (Point p : S.pg.closure(as_point_set(t))) {
          int f = csp.flats.flat_of_point[p];
          if (f >= 0) fset.insert(f);
        }
      } else {
        for (Point p : t) {
          int f = csp.flats.flat_of_point[p];
          if (f >= 0) fset.insert(f);
        }
      }
      if (fset.size() < 2 || (strong && fset.size() > l)) {
        csp.unsat_markers.push_back(t);
        continue;
      }
      std::vector<int> flats(fset.begin(), fset.end());
      ConstraintType type = strong ? ConstraintType::AllDifferent : ConstraintType::NotAllEqual;
      if (seen.insert({static_cast<int>(type), flats}).second)
        csp.constraints.push_back({type, std::move(flats), t});
    }
  }
  return csp;
}

namespace detail {

// Chronological backtracking with forward checking; values are tried
// ascending. Three entry points differ in variable order: first() uses
// descending constraint degree (ties by flat index), first_mrv() picks the
// smallest live domain, and the canonical enumerations fix flat order.
class CspSearch {
 public:
  CspSearch(const ColourCSP& csp, std::vector<ColourConstraint> extra = {})
      : csp_(csp), extra_(std::move(extra)) {
    n_ = csp.flats.flats.size();
    all_.reserve(csp.constraints.size() + extra_.size());
    for (const auto& c : csp_.constraints) all_.push_back(&c);
    for (const auto& c : extra_) all_.push_back(&c);
    var_cons_.assign(n_, {});
    for (std::size_t ci = 0; ci < all_.size(); ++ci)
      for (int v : all_[ci]->flats) var_cons_[v].push_back(ci);
    full_mask_ = csp_.l >= 64 ? ~0ull : ((1ull << csp_.l) - 1);
  }

  // first solution in descending-degree variable order; nullopt if
  // unsatisfiable
  std::optional<std::vector<int>> first() {
    if (csp_.trivially_unsat()) return std::nullopt;
    init();
    order_ = make_order(true);
    std::vector<int> out;
    bool found = false;
    search(0, 0, [&](const std::vector<int>& a) {
      out = a;
      found = true;
      return true;
    });
    if (found) return out;
    return std::nullopt;
  }

  // like first() but with dynamic smallest-domain variable selection, which
  // behaves like unit propagation on dense AllDifferent instances; used for
  // the unsatisfiability queries of the every-colouring oracle
  std::optional<std::vector<int>> first_mrv() {
    if (csp_.trivially_unsat()) return std::nullopt;
    init();
    std::vector<int> out;
    bool found = false;
    search_mrv(0, [&](const std::vector<int>& a) {
      out = a;
      found = true;
      return true;
    });
    if (found) return out;
    return std::nullopt;
  }

  // canonical (first-occurrence relabelled) solutions in flat order, up to
  // cap; returns (count, capped)
  std::pair<std::uint64_t, bool> count_canonical(std::uint64_t cap) {
    if (csp_.trivially_unsat()) return {0, false};
    init();
    order_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) order_[i] = static_cast<int>(i);
    std::uint64_t count = 0;
    bool capped = false;
    search_canonical(0, 0, [&](const std::vector<int>&) {
      if (++count >= cap) { capped = true; return true; }
      return false;
    });
    return {count, capped};
  }

  void enumerate_canonical(const std::function<bool(const std::vector<int>&)>& fn) {
    if (csp_.trivially_unsat()) return;
    init();
    order_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) order_[i] = static_cast<int>(i);
    search_canonical(0, 0, fn);
  }

 private:
  void init() {
    dom_.assign(n_, full_mask_);
    val_.assign(n_, 0);
    trail_.clear();
  }

  std::vector<int> make_order(bool degree_order) const {
    std::vector<int> order(n_);
    for (std::size_t i = 0; i < n_; ++i) order[i] = static_cast<int>(i);
    if (degree_order)
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return var_cons_[a].size() > var_cons_[b].size();
      });
    return order;
  }

  bool remove_value(int var, int value) {
    std::uint64_t bit = 1ull << (value - 1);
    if (!(dom_[var] & bit)) return true;
    trail_.emplace_back(var, dom_[var]);
    dom_[var] &= ~bit;
    return dom_[var] != 0;
  }

  // forward checking after var=value; false on wipeout or violated constraint
  bool propagate(int var, int value) {
    for (std::size_t ci : var_cons_[var]) {
      const ColourConstraint& c = *all_[ci];
      if (c.type == ConstraintType::AllDifferent) {
        for (int u : c.flats) {
          if (u == var) continue;
          if (val_[u] != 0) {
            if (val_[u] == value) return false;
          } else if (!remove_value(u, value)) {
            return false;
          }
        }
      } else {  // NotAllEqual
        int unassigned = -1;
        bool all_equal = true;
        for (int u : c.flats) {
          if (val_[u] == 0) {
            if (unassigned >= 0) { all_equal = false; break; }
            unassigned = u;
          } else if (val_[u] != value) {
            all_equal = false;
            break;
          }
        }
        if (!all_equal) continue;
        if (unassigned < 0) return false;  // fully assigned, all equal
        if (!remove_value(unassigned, value)) return false;
      }
    }
    return true;
  }

  template <typename Fn>
  bool search(std::size_t depth, std::size_t, const Fn& emit) {
    if (depth == n_) {
      std::vector<int> out(val_.begin(), val_.end());
      return emit(out);
    }
    int var = order_[depth];
    for (int value = 1; value <= static_cast<int>(csp_.l); ++value) {
      if (!(dom_[var] & (1ull << (value - 1)))) continue;
      std::size_t mark = trail_.size();
      val_[var] = value;
      if (propagate(var, value)) {
        if (search(depth + 1, 0, emit)) return true;
      }
      val_[var] = 0;
      while (trail_.size() > mark) {
        dom_[trail_.back().first] = trail_.back().second;
        trail_.pop_back();
      }
    }
    return false;
  }

  template <typename Fn>
  bool search_mrv(std::size_t assigned, const Fn& emit) {
    if (assigned == n_) {
      std::vector<int> out(val_.begin(), val_.end());
      return emit(out);
    }
    int var = -1, best = INT_MAX;
    for (std::size_t v = 0; v < n_; ++v) {
      if (val_[v] != 0) continue;
      int width = std::popcount(dom_[v]);
      if (width < best) {
        best = width;
        var = static_cast<int>(v);
        if (best == 1) break;
      }
    }
    for (int value = 1; value <= static_cast<int>(csp_.l); ++value) {
      if (!(dom_[var] & (1ull << (value - 1)))) continue;
      std::size_t mark = trail_.size();
      val_[var] = value;
      if (propagate(var, value)) {
        if (search_mrv(assigned + 1, emit)) return true;
      }
      val_[var] = 0;
      while (trail_.size() > mark) {
        dom_[trail_.back().first] = trail_.back().second;
        trail_.pop_back();
      }
    }
    return false;
  }

  // restricted-growth enumeration: value <= max used + 1
  template <typename Fn>
  bool search_canonical(std::size_t depth, int max_used, const Fn& emit) {
    if (depth == n_) {
      std::vector<int> out(val_.begin(), val_.end());
      return emit(out);
    }
    int var = order_[depth];
    int ceiling = std::min(static_cast<int>(csp_.l), max_used + 1);
    for (int value = 1; value <= ceiling; ++value) {
      if (!(dom_[var] & (1ull << (value - 1)))) continue;
      std::size_t mark = trail_.size();
      val_[var] = value;
      if (propagate(var, value)) {
        if (search_canonical(depth + 1, std::max(max_used, value), emit)) return true;
      }
      val_[var] = 0;
      while (trail_.size() > mark) {
        dom_[trail_.back().first] = trail_.back().second;
        trail_.pop_back();
      }
    }
    return false;
  }

  const ColourCSP& csp_;
  std::vector<ColourConstraint> extra_;
  std::vector<const ColourConstraint*> all_;
  std::size_t n_ = 0;
  std::uint64_t full_mask_ = 0;
  std::vector<std::vector<std::size_t>> var_cons_;
  std::vector<std::uint64_t> dom_;
  std::vector<int> val_;
  std::vector<int> order_;
  std::vector<std::pair<int, std::uint64_t>> trail_;
};

}  // namespace detail

inline std::optional<std::vector<int>> find_colouring(const ColourCSP& csp) {
  detail::CspSearch s(csp);
  return s.first();
}

inline std::optional<std::vector<int>> find_colouring(const RelStructure& S, unsigned l,
                                                      bool strong,
                                                      ColourRule rule = ColourRule::Closure) {
  ColourCSP csp = build_csp(S, l, strong, rule);
  return find_colouring(csp);
}

struct OrbitCount {
  std::uint64_t count = 0;
  bool at_least = false;  // true when the cap cut the enumeration short
};

// orbits of valid colourings under colour permutation, counted via canonical
// (first-occurrence relabelled) representatives
inline OrbitCount count_colourings_up_to_perm(const RelStructure& S, unsigned l,
                                              bool strong, std::uint64_t cap,
                                              ColourRule rule = ColourRule::Closure) {
  ColourCSP csp = build_csp(S, l, strong, rule);
  detail::CspSearch s(csp);
  auto [count, capped] = s.count_canonical(cap);
  return {count, capped};
}

// true iff every (strong) l-colouring of S gives a and b the same colour
inline bool same_colour_all(const RelStructure& S, Point a, Point b, unsigned l,
                            bool strong, ColourRule rule = ColourRule::Closure) {
  PointSet cl0 = S.pg.closure_of_empty();
  if (contains_point(cl0, a) || contains_point(cl0, b))
    throw std::invalid_argument("same_colour_all: point in closure(empty)");
  ColourCSP csp = build_csp(S, l, strong, rule);
  int fa = csp.flats.flat_of_point[a], fb = csp.flats.flat_of_point[b];
  if (fa < 0 || fb < 0) throw std::invalid_argument("same_colour_all: point outside universe");
  std::optional<std::vector<int>> base = find_colouring(csp);
  if (!base) throw std::invalid_argument("same_colour_all: structure is not colourable");
  if (fa == fb) return true;
  if ((*base)[fa] != (*base)[fb]) return false;
  detail::CspSearch s(csp, {{ConstraintType::AllDifferent, {std::min(fa, fb), std::max(fa, fb)}, {}}});
  return !s.first_mrv().has_value();
}

// Partition of the rank-1 flats into "same colour in every colouring"
// classes. Each pairwise query either merges two classes (an unsatisfiable
// split) or yields a fresh colouring that refines the candidate partition,
// so the number of solver calls is linear in the number of flats.
inline std::vector<int> same_colour_classes(const ColourCSP& csp) {
  const std::size_t n = csp.flats.flats.size();
  std::optional<std::vector<int>> base = find_colouring(csp);
  if (!base) throw std::invalid_argument("same_colour_classes: structure is not colourable");

  std::vector<std::vector<int>> partitions{*base};
  std::vector<int> dsu(n);
  for (std::size_t i = 0; i < n; ++i) dsu[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int x) {
    while (dsu[x] != x) x = dsu[x] = dsu[dsu[x]];
    return x;
  };
  auto separated = [&](std::size_t u, std::size_t v) {
    for (const auto& p : partitions)
      if (p[u] != p[v]) return true;
    return false;
  };

  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (find(static_cast<int>(u)) == find(static_cast<int>(v))) continue;
      if (separated(u, v)) continue;
      detail::CspSearch s(csp, {{ConstraintType::AllDifferent,
                                 {static_cast<int>(u), static_cast<int>(v)},
                                 {}}});
      auto split = s.first_mrv();
      if (split)
        partitions.push_back(*split);
      else
        dsu[find(static_cast<int>(u))] = find(static_cast<int>(v));
    }
  }
  std::vector<int> out(n);
  std::map<int, int> relabel;
  for (std::size_t i = 0; i < n; ++i) {
    int r = find(static_cast<int>(i));
    auto it = relabel.find(r);
    if (it == relabel.end()) it = relabel.emplace(r, static_cast<int>(relabel.size())).first;
    out[i] = it->second;
  }
  return out;
}

inline std::vector<int> same_colour_classes(const RelStructure& S, unsigned l,
                                            bool strong,
                                            ColourRule rule = ColourRule::Closure) {
  ColourCSP csp = build_csp(S, l, strong, rule);
  return same_colour_classes(csp);
}

// least l' <= l_max admitting a (strong) colouring; nullopt if none
inline std::optional<unsigned> chromatic_min(const RelStructure& S, bool strong,
                                             unsigned l_max,
                                             ColourRule rule = ColourRule::Closure) {
  for (unsigned lp = 1; lp <= l_max; ++lp)
    if (find_colouring(S, lp, strong, rule)) return lp;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Monochromatic subspaces

struct MonoReport {
  std::vector<int> colouring;       // per rank-1 flat
  std::vector<Flat> maximal;        // maximal monochromatic flats, rank >= min_rank
  unsigned e = 0;                   // rank of closure of their union
  unsigned t = 0;                   // how many there are
};

// with the flat partition and the rank >= min_rank flats precomputed, for
// sweeps over many colourings
inline MonoReport maximal_mono_flats_over(const Pregeometry& pg,
                                          const FlatPartition& fp,
                                          const std::vector<Flat>& candidates,
                                          const std::vector<int>& colouring) {
  if (colouring.size() != fp.flats.size())
    throw std::invalid_argument("maximal_mono_flats: colouring size mismatch");

  auto mono = [&](const Flat& f) {
    int c = 0;
    for (Point p : f.members) {
      int fi = fp.flat_of_point[p];
      if (fi < 0) continue;
      if (c == 0) c = colouring[fi];
      else if (colouring[fi] != c) return false;
    }
    return c != 0;
  };

  std::vector<Flat> monos;
  for (const Flat& f : candidates)
    if (mono(f)) monos.push_back(f);

  MonoReport rep;
  rep.colouring = colouring;
  for (const Flat& f : monos) {
    bool contained = false;
    for (const Flat& g : monos)
      if (f.members != g.members && subset_of(f.members, g.members)) {
        contained = true;
        break;
      }
    if (!contained) rep.maximal.push_back(f);
  }
  std::sort(rep.maximal.begin(), rep.maximal.end());
  rep.t = static_cast<unsigned>(rep.maximal.size());
  PointSet uni;
  for (const Flat& f : rep.maximal) uni = set_union(uni, f.members);
  rep.e = pg.rank_of(Tuple(uni.begin(), uni.end()));
  return rep;
}

// colouring is indexed by pg.one_dim_flats() order
inline MonoReport maximal_mono_flats(const Pregeometry& pg,
                                     const std::vector<int>& colouring,
                                     unsigned min_rank = 2) {
  PointSet all(pg.universe_size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Point>(i);
  FlatPartition fp = FlatPartition::of(pg, all);
  std::vector<Flat> candidates;
  for (unsigned r = min_rank; r <= pg.rank(); ++r)
    for (Flat& f : pg.flats_of_rank(r)) candidates.push_back(std::move(f));
  return maximal_mono_flats_over(pg, fp, candidates, colouring);
}

// ---------------------------------------------------------------------------
// Desk-scale Ramsey probe over the linear family

struct RamseyProbe {
  std::optional<unsigned> dim;                  // least forcing dimension, if found
  unsigned searched_to = 0;                     // last fully swept n
  std::map<unsigned, std::vector<int>> avoiding;  // per n below dim: a colouring
                                                  // with no monochromatic target flat
  std::uint64_t colourings_checked = 0;
};

// Least n <= n_max such that every l-colouring of the rank-n linear space
// over GF(q) has a monochromatic flat of rank target_rank. The sweep runs
// over canonical colourings only (the property is permutation-invariant).
inline RamseyProbe min_ramsey_dim(unsigned q, unsigned l, unsigned target_rank = 2,
                                  unsigned n_max = 4,
                                  std::uint64_t cap = max_cells_cap()) {
  RamseyProbe probe;
  for (unsigned n = target_rank; n <= n_max; ++n) {
    Pregeometry pg = Pregeometry::linear(q, n);
    PointSet all(pg.universe_size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Point>(i);
    FlatPartition fp = FlatPartition::of(pg, all);

    std::vector<std::vector<int>> targets;  // flat indices per target flat
    for (const Flat& f : pg.flats_of_rank(target_rank)) {
      std::set<int> ids;
      for (Point p : f.members)
        if (fp.flat_of_point[p] >= 0) ids.insert(fp.flat_of_point[p]);
      targets.emplace_back(ids.begin(), ids.end());
    }

    std::optional<std::vector<int>> avoider;
    std::uint64_t checked = 0;
    bool hit_cap = false;
    RelStructure empty(pg, binary_vocab());
    ColourCSP free_csp;
    free_csp.flats = fp;
    free_csp.l = l;
    detail::CspSearch sweep(free_csp);
    sweep.enumerate_canonical([&](const std::vector<int>& c) {
      if (++checked > cap) { hit_cap = true; return true; }
      for (const auto& tgt : targets) {
        bool mono = true;
        for (std::size_t i = 1; i < tgt.size(); ++i)
          if (c[tgt[i]] != c[tgt[0]]) { mono = false; break; }
        if (mono) return false;  // this colouring has a monochromatic target
      }
      avoider = c;
      return true;  // avoider found; n is not forcing
    });
    probe.colourings_checked += checked;
    if (hit_cap) return probe;  // Unknown with progress in searched_to
    if (avoider) {
      probe.avoiding[n] = *avoider;
      probe.searched_to = n;
      continue;
    }
    probe.dim = n;
    probe.searched_to = n;
    return probe;
  }
  return probe;  // Unknown(n_max)
}

// ---------------------------------------------------------------------------
// The weak-case construction: choose the colouring c0 minimising the rank of
// the union of its maximal monochromatic flats (ties broken by maximal t),
// then define B's minimal-arity relation to hold exactly on tuples that are
// not inside any W_i and whose closure has rank >= 2.

struct C0Result {
  std::vector<int> c0;        // per rank-1 flat of the ambient
  MonoReport report;          // W_1..W_t, e, t for c0
  RelStructure B;
  Point b1 = 0, b2 = 0;       // independent points of W_1
  std::uint64_t swept = 0;    // canonical colourings examined
};

inline C0Result find_c0_and_build_B(const Pregeometry& pg, unsigned l,
                                    const Vocabulary& vocab,
                                    std::uint64_t cap = max_cells_cap()) {
  PointSet all(pg.universe_size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Point>(i);
  FlatPartition fp = FlatPartition::of(pg, all);

  ColourCSP free_csp;
  free_csp.flats = fp;
  free_csp.l = l;
  detail::CspSearch sweep(free_csp);

  std::vector<Flat> candidates;
  for (unsigned r = 2; r <= pg.rank(); ++r)
    for (Flat& f : pg.flats_of_rank(r)) candidates.push_back(std::move(f));

  C0Result out{std::vector<int>(), MonoReport(), RelStructure(pg, vocab), 0, 0, 0};
  bool have = false;
  std::uint64_t swept = 0;
  bool hit_cap = false;
  sweep.enumerate_canonical([&](const std::vector<int>& c) {
    if (++swept > cap) { hit_cap = true; return true; }
    MonoReport rep = maximal_mono_flats_over(pg, fp, candidates, c);
    if (rep.t == 0) return false;  // cannot host b1, b2
    if (!have || rep.e < out.report.e ||
        (rep.e == out.report.e && rep.t > out.report.t)) {
      out.c0 = c;
      out.report = std::move(rep);
      have = true;
    }
    return false;
  });
  out.swept = swept;
  if (hit_cap) throw ResourceError("find_c0_and_build_B: colouring sweep cap exceeded");
  if (!have)
    throw std::invalid_argument(
        "find_c0_and_build_B: no colouring has a rank-2 monochromatic flat; "
        "raise the ambient rank");

  const unsigned sym = out.B.vocab.min_arity_symbol();
  const std::vector<Flat>& W = out.report.maximal;
  detail::for_each_candidate(out.B, sym, [&](const Tuple& t) {
    PointSet pts = as_point_set(t);
    for (const Flat& w : W)
      if (subset_of(pts, w.members)) return;
    out.B.rels[sym].insert(t);
  });

  PointSet cl0 = pg.closure_of_empty();
  const Flat& w1 = W.front();
  Point b1 = 0;
  bool got1 = false;
  for (Point p : w1.members)
    if (!contains_point(cl0, p)) { b1 = p; got1 = true; break; }
  if (!got1) throw InternalError("find_c0_and_build_B: W_1 has no coloured point");
  for (Point p : w1.members) {
    if (p == b1 || contains_point(cl0, p)) continue;
    if (pg.is_independent({b1, p})) { out.b1 = b1; out.b2 = p; break; }
  }
  if (out.b1 == out.b2) throw InternalError("find_c0_and_build_B: W_1 has rank < 2");
  return out;
}

// ---------------------------------------------------------------------------
// Randomized search for a structure with chromatic number exactly l

struct FindUBudget {
  std::uint64_t seed = 1;
  std::uint64_t max_tries = 200;
  unsigned n_lo = 2;
  unsigned n_hi = 4;
};

inline std::optional<RelStructure> find_U(Kind kind, unsigned q, unsigned l,
                                          const Vocabulary& vocab, bool strong,
                                          const FindUBudget& budget,
                                          ColourRule rule = ColourRule::Closure) {
  for (std::uint64_t i = 0; i < budget.max_tries; ++i) {
    SamplerConfig cfg;
    cfg.kind = kind;
    cfg.q = q;
    cfg.n = budget.n_lo + static_cast<unsigned>(i % (budget.n_hi - budget.n_lo + 1));
    cfg.vocab = vocab;
    cfg.l = l;
    cfg.strong = strong;
    cfg.rule = rule;
    cfg.seed = budget.seed;
    RelStructure U = sample_colourable(cfg, i);
    std::optional<unsigned> chi = chromatic_min(U, strong, l, rule);
    if (chi && *chi == l) return U;
  }
  return std::nullopt;
}

}  // namespace pregeomzol
