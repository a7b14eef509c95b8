#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pregeomzol/colouring.hpp"
#include "pregeomzol/formula.hpp"
#include "pregeomzol/structures.hpp"

namespace pregeomzol {

// ---------------------------------------------------------------------------
// Characteristic formulas
//
// Quantifier-free description of a structure with respect to an enumeration
// of its universe: distinctness, enough theta atoms to pin the matroid (the
// pivot atoms of every subset of size <= rank+1), all relation atoms with
// both signs, and colour atoms when the structure is coloured. Satisfaction
// forces the variable assignment to be an embedding.

namespace detail {

inline void characteristic_core(const RelStructure& S,
                                const std::vector<Point>& enumeration,
                                const std::vector<std::string>& names,
                                std::vector<FormulaPtr>& atoms) {
  const std::size_t m = enumeration.size();
  if (m != S.universe.size() || as_point_set(Tuple(enumeration.begin(), enumeration.end())) != S.universe)
    throw std::invalid_argument("characteristic formula: enumeration must cover the universe exactly");
  if (names.size() != m) throw std::invalid_argument("characteristic formula: name count mismatch");

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      atoms.push_back(f_not(f_eq(names[i], names[j])));

  // theta pivot atoms for every subset of size <= rank+1
  const unsigned max_k = std::min<unsigned>(S.dim() + 1, static_cast<unsigned>(m));
  std::vector<std::size_t> idx;
  std::function<void(std::size_t, unsigned)> rec = [&](std::size_t start, unsigned left) {
    if (left == 0) {
      for (std::size_t pos = 0; pos < idx.size(); ++pos) {
        Tuple args;
        std::vector<std::string> arg_names;
        for (std::size_t p2 = 0; p2 < idx.size(); ++p2) {
          if (p2 == pos) continue;
          args.push_back(enumeration[idx[p2]]);
          arg_names.push_back(names[idx[p2]]);
        }
        FormulaPtr atom = f_theta(arg_names, names[idx[pos]]);
        bool holds = S.pg.theta(args, enumeration[idx[pos]]);
        atoms.push_back(holds ? atom : f_not(atom));
      }
      return;
    }
    for (std::size_t i = start; i + left <= m; ++i) {
      idx.push_back(i);
      rec(i + 1, left - 1);
      idx.pop_back();
    }
  };
  for (unsigned k = 1; k <= max_k; ++k) {
    idx.clear();
    rec(0, k);
  }

  // relation atoms, both signs
  std::map<Point, std::string> name_of;
  for (std::size_t i = 0; i < m; ++i) name_of[enumeration[i]] = names[i];
  for (unsigned s = 0; s < S.vocab.symbols.size(); ++s) {
    const unsigned arity = S.vocab.symbols[s].arity;
    double count = 1;
    for (unsigned a = 0; a < arity; ++a) count *= static_cast<double>(m);
    if (count > static_cast<double>(max_cells_cap()))
      throw ResourceError("characteristic formula: relation atom count exceeds cap");
    Tuple t(arity);
    std::function<void(unsigned)> rec_rel = [&](unsigned pos) {
      if (pos == arity) {
        std::vector<std::string> vs;
        for (Point p : t) vs.push_back(name_of[p]);
        FormulaPtr atom = f_rel(S.vocab.symbols[s].name, vs);
        atoms.push_back(S.holds(s, t) ? atom : f_not(atom));
        return;
      }
      for (std::size_t i = 0; i < m; ++i) {
        t[pos] = enumeration[i];
        rec_rel(pos + 1);
      }
    };
    rec_rel(0);
  }
}

}  // namespace detail

inline std::vector<std::string> default_var_names(std::size_t m, const std::string& prefix = "x") {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= m; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

inline FormulaPtr characteristic_formula(const RelStructure& S,
                                         const std::vector<Point>& enumeration,
                                         const std::vector<std::string>& names) {
  std::vector<FormulaPtr> atoms;
  detail::characteristic_core(S, enumeration, names, atoms);
  return f_and(std::move(atoms));
}

inline FormulaPtr characteristic_formula(const ColouredStructure& M,
                                         const std::vector<Point>& enumeration,
                                         const std::vector<std::string>& names) {
  std::vector<FormulaPtr> atoms;
  detail::characteristic_core(M.base, enumeration, names, atoms);
  PointSet cl0 = M.base.pg.closure_of_empty();
  for (std::size_t i = 0; i < enumeration.size(); ++i) {
    int c = M.colour_of(enumeration[i]);
    for (int j = 1; j <= static_cast<int>(M.l); ++j) {
      FormulaPtr atom = f_col(j, names[i]);
      atoms.push_back(j == c ? atom : f_not(atom));
    }
  }
  return f_and(std::move(atoms));
}

// ---------------------------------------------------------------------------
// The strong-case formula

// x in cl(y) \/ y in cl(x) \/ exists y_2..y_l (and fillers z) such that every
// pair from {x, y_2..y_l} and from {y, y_2..y_l} is independent and
// R_1-related. Filler variables pad R_1 tuples to arity r1; none are emitted
// when r1 = 2.
inline FormulaPtr build_xi_strong(unsigned l, const RelSymbol& r1_symbol,
                                  const std::string& x = "x", const std::string& y = "y") {
  if (l < 2) throw std::invalid_argument("xi_strong: l >= 2 required");
  const unsigned r1 = r1_symbol.arity;
  if (r1 < 2) throw std::invalid_argument("xi_strong: arity >= 2 required");

  auto yvar = [&](unsigned i) { return y + std::to_string(i); };
  auto zvar = [&](const std::string& tag, unsigned i, unsigned j) {
    return "z_" + tag + "_" + std::to_string(i) + "_" + std::to_string(j);
  };

  std::vector<FormulaPtr> conj;
  for (unsigned i = 2; i <= l; ++i) {
    std::vector<std::string> tx{x, yvar(i)}, ty{y, yvar(i)};
    for (unsigned j = 1; j + 1 < r1; ++j) {
      tx.push_back(zvar("x", i, j));
      ty.push_back(zvar("y", i, j));
    }
    conj.push_back(f_rel(r1_symbol.name, tx));
    conj.push_back(f_not(f_theta({x}, yvar(i))));
    conj.push_back(f_rel(r1_symbol.name, ty));
    conj.push_back(f_not(f_theta({y}, yvar(i))));
  }
  for (unsigned i = 2; i <= l; ++i)
    for (unsigned j = 2; j < i; ++j) {
      std::vector<std::string> tij{yvar(i), yvar(j)};
      for (unsigned k = 1; k + 1 < r1; ++k) tij.push_back(zvar(std::to_string(i), j, k));
      conj.push_back(f_rel(r1_symbol.name, tij));
      conj.push_back(f_not(f_theta({yvar(j)}, yvar(i))));
    }

  std::vector<std::string> bound;
  for (unsigned i = 2; i <= l; ++i) bound.push_back(yvar(i));
  for (unsigned i = 2; i <= l; ++i)
    for (unsigned j = 1; j + 1 < r1; ++j) bound.push_back(zvar("x", i, j));
  for (unsigned i = 2; i <= l; ++i)
    for (unsigned j = 1; j + 1 < r1; ++j) bound.push_back(zvar("y", i, j));
  for (unsigned i = 2; i <= l; ++i)
    for (unsigned j = 2; j < i; ++j)
      for (unsigned k = 1; k + 1 < r1; ++k) bound.push_back(zvar(std::to_string(i), j, k));

  return f_or({f_theta({y}, x), f_theta({x}, y),
               f_exists_many(bound, f_and(std::move(conj)))});
}

// Optimized evaluator for the strong-case formula, equivalent to evaluating
// build_xi_strong. Precomputes an adjacency matrix for "some R_1 tuple
// starts with (u, v)" (the per-atom filler variables reduce to exactly
// that) and answers closure atoms from the rank-1 flat partition.
class XiStrongEvaluator {
 public:
  XiStrongEvaluator(const RelStructure& S, unsigned l)
      : universe_(S.universe), l_(l), fp_(FlatPartition::of(S)) {
    n_ = S.universe.size();
    idx_.assign(S.pg.universe_size(), -1);
    for (std::size_t i = 0; i < n_; ++i) idx_[S.universe[i]] = static_cast<int>(i);
    rel1_.assign(n_ * n_, false);
    const unsigned sym = S.vocab.min_arity_symbol();
    for (const Tuple& t : S.rels[sym]) {
      if (S.vocab.symmetric_irreflexive) {
        for (std::size_t i = 0; i < t.size(); ++i)
          for (std::size_t j = 0; j < t.size(); ++j)
            if (i != j) rel1_[idx_[t[i]] * n_ + idx_[t[j]]] = true;
      } else {
        rel1_[idx_[t[0]] * n_ + idx_[t[1]]] = true;
      }
    }
  }

  bool holds(Point a, Point b) const {
    int ai = idx_[a], bi = idx_[b];
    if (ai < 0 || bi < 0) throw std::invalid_argument("point outside universe");
    if (in_cl(bi, ai) || in_cl(ai, bi)) return true;
    std::vector<int> candidates;
    for (std::size_t v = 0; v < n_; ++v)
      if (rel1_[ai * n_ + v] && !in_cl(ai, static_cast<int>(v)) &&
          rel1_[bi * n_ + v] && !in_cl(bi, static_cast<int>(v)))
        candidates.push_back(static_cast<int>(v));
    // y_2..y_l is an ordered sequence: the later element of a pair carries
    // the R_1 atom, so all arrangements must be searched
    const unsigned need = l_ - 1;
    std::vector<int> chosen;
    std::vector<bool> used(candidates.size(), false);
    std::function<bool()> rec = [&]() -> bool {
      if (chosen.size() == need) return true;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (used[i]) continue;
        int yi = candidates[i];
        bool ok = true;
        for (int yj : chosen)
          if (!rel1_[yi * n_ + yj] || in_cl(yj, yi)) { ok = false; break; }
        if (!ok) continue;
        used[i] = true;
        chosen.push_back(yi);
        if (rec()) return true;
        chosen.pop_back();
        used[i] = false;
      }
      return false;
    };
    return rec();
  }

 private:
  // universe[v] in cl(universe[u]): inside closure(empty), or the same flat
  bool in_cl(int u, int v) const {
    Point pu = universe_[u], pv = universe_[v];
    if (fp_.flat_of_point[pv] < 0) return true;
    if (fp_.flat_of_point[pu] < 0) return false;
    return fp_.flat_of_point[pu] == fp_.flat_of_point[pv];
  }

  PointSet universe_;
  unsigned l_;
  FlatPartition fp_;
  std::size_t n_ = 0;
  std::vector<int> idx_;
  std::vector<bool> rel1_;
};

inline bool xi_strong_holds(const RelStructure& S, unsigned l, Point a, Point b) {
  return XiStrongEvaluator(S, l).holds(a, b);
}

inline bool xi_strong_holds(const ColouredStructure& M, Point a, Point b) {
  return xi_strong_holds(M.base, M.l, a, b);
}

// ---------------------------------------------------------------------------
// The weak-case formulas

struct WeakXi {
  FormulaPtr xi0;  // exists z_3..z_beta chi_B(x, y, z_3..z_beta)
  FormulaPtr xi;   // x in cl(y) \/ exists z (xi0(x,z) /\ xi0(y,z))
};

// enumeration must start with b1, b2
inline WeakXi build_weak_xi(const RelStructure& B, const std::vector<Point>& enumeration,
                            Point b1, Point b2) {
  if (enumeration.size() < 2 || enumeration[0] != b1 || enumeration[1] != b2)
    throw std::invalid_argument("build_weak_xi: enumeration must start with b1, b2");

  auto make_xi0 = [&](const std::string& u, const std::string& v) {
    std::vector<std::string> names{u, v};
    for (std::size_t i = 3; i <= enumeration.size(); ++i)
      names.push_back("w" + std::to_string(i));
    FormulaPtr chi = characteristic_formula(B, enumeration, names);
    std::vector<std::string> bound(names.begin() + 2, names.end());
    return f_exists_many(bound, chi);
  };

  WeakXi out;
  out.xi0 = make_xi0("x", "y");
  out.xi = f_or({f_theta({"y"}, "x"),
                 f_exists("z", f_and({make_xi0("x", "z"), make_xi0("y", "z")}))});
  return out;
}

// Embedding-search evaluator for xi0/xi: xi0(u,v) holds iff B embeds with
// b1 -> u, b2 -> v. Cross-checked against formula evaluation in tests.
inline bool xi0_weak_holds(const RelStructure& M, const RelStructure& B, Point b1,
                           Point b2, Point u, Point v) {
  if (u == v) return false;  // b1, b2 are distinct, embeddings are injective
  PointMap fixed{{b1, u}, {b2, v}};
  std::sort(fixed.begin(), fixed.end());
  return !find_embeddings(B, M, false, 1, fixed).empty();
}

inline bool xi_weak_holds(const RelStructure& M, const RelStructure& B, Point b1,
                          Point b2, Point a, Point b) {
  if (M.pg.theta({b}, a)) return true;
  std::set<Point> za;
  for (Point z : M.universe)
    if (xi0_weak_holds(M, B, b1, b2, a, z)) za.insert(z);
  if (za.empty()) return false;
  for (Point z : M.universe)
    if (za.count(z) && xi0_weak_holds(M, B, b1, b2, b, z)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// zeta, eta and the colour compatible extension axioms

// zeta_gamma over an enumeration of A: theta_0 atoms for points in
// closure(empty), xi(x_i,x_j) for same-coloured pairs, not xi for
// differently coloured pairs. xi is spliced in by renaming its free x,y.
inline FormulaPtr build_zeta(const RelStructure& A, const std::vector<Point>& enumeration,
                             const std::vector<int>& gamma_per_point,
                             const std::vector<std::string>& names, const FormulaPtr& xi,
                             const std::string& xi_x = "x", const std::string& xi_y = "y") {
  // splicing xi in by renaming must not capture its bound variables
  std::vector<std::string> bound;
  collect_bound_names(xi, bound);
  for (const std::string& n : names)
    if (std::find(bound.begin(), bound.end(), n) != bound.end())
      throw std::invalid_argument("zeta: target name collides with a bound name of xi: " + n);
  PointSet cl0 = A.pg.closure_of_empty();
  std::vector<FormulaPtr> conj;
  const std::size_t m = enumeration.size();
  for (std::size_t i = 0; i < m; ++i)
    if (contains_point(cl0, enumeration[i])) conj.push_back(f_theta({}, names[i]));
  auto xi_at = [&](std::size_t i, std::size_t j) {
    return rename_free(xi, {{xi_x, names[i]}, {xi_y, names[j]}});
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      if (contains_point(cl0, enumeration[i]) || contains_point(cl0, enumeration[j])) continue;
      if (gamma_per_point[i] == gamma_per_point[j])
        conj.push_back(xi_at(i, j));
      else
        conj.push_back(f_not(xi_at(i, j)));
    }
  return f_and(std::move(conj));
}

// eta_n(x_1..x_n): forall y (theta_n(x_1..x_n, y) -> \/ y = x_i)
inline FormulaPtr build_eta(const std::vector<std::string>& names,
                            const std::string& y = "y_eta") {
  std::vector<FormulaPtr> eqs;
  for (const std::string& n : names) eqs.push_back(f_eq(y, n));
  return f_forall(y, f_implies(f_theta(names, y), f_or(std::move(eqs))));
}

struct ExtensionAxiom {
  FormulaPtr axiom;                      // conjunction of the instances
  std::vector<FormulaPtr> instances;     // deduplicated instances
  std::size_t colourings_of_b = 0;       // before deduplication
};

// The l-colour compatible B/A-extension axiom, A a proper closed
// substructure of the l-colourable B. One instance per colouring of B up to
// colour permutation (instances produced by permutation-equivalent
// colourings are syntactically identical, so the sweep enumerates canonical
// colourings only).
inline ExtensionAxiom build_extension_axiom(const RelStructure& B, const PointSet& A,
                                            unsigned l, bool strong, const FormulaPtr& xi,
                                            ColourRule rule = ColourRule::Closure) {
  if (B.pg.closure(A) != A)
    throw std::invalid_argument("extension axiom: A is not closed in B");
  if (A == B.universe)
    throw std::invalid_argument("extension axiom: A must be a proper substructure");

  RelStructure a_sub = closed_substructure(B, A);
  // enumeration: A's points first
  std::vector<Point> enumeration(A.begin(), A.end());
  for (Point p : set_difference(B.universe, A)) enumeration.push_back(p);
  const std::size_t alpha = A.size(), beta = enumeration.size();

  std::vector<std::string> names = default_var_names(beta);
  std::vector<std::string> a_names(names.begin(), names.begin() + alpha);

  FormulaPtr chi_a = characteristic_formula(a_sub, std::vector<Point>(A.begin(), A.end()), a_names);
  FormulaPtr chi_b = characteristic_formula(B, enumeration, names);
  FormulaPtr eta_a = build_eta(a_names, "y_eta");
  FormulaPtr eta_b = build_eta(names, "y_eta");

  ColourCSP csp = build_csp(B, l, strong, rule);
  ExtensionAxiom out;
  std::vector<FormulaPtr> instances;
  detail::CspSearch sweep(csp);
  sweep.enumerate_canonical([&](const std::vector<int>& gamma_flats) {
    ++out.colourings_of_b;
    std::vector<int> per_point(beta, 0);
    for (std::size_t i = 0; i < beta; ++i) {
      int f = csp.flats.flat_of_point[enumeration[i]];
      per_point[i] = f >= 0 ? gamma_flats[f] : 0;
    }
    std::vector<int> a_per_point(per_point.begin(), per_point.begin() + alpha);
    FormulaPtr zeta_a = build_zeta(a_sub, std::vector<Point>(A.begin(), A.end()),
                                   a_per_point, a_names, xi);
    FormulaPtr zeta_b = build_zeta(B, enumeration, per_point, names, xi);
    FormulaPtr premise = f_and({chi_a, zeta_a, eta_a});
    FormulaPtr conclusion = f_and({chi_b, zeta_b, eta_b});
    std::vector<std::string> exist_vars(names.begin() + alpha, names.end());
    FormulaPtr inst = f_forall_many(
        a_names, f_exists_many(exist_vars, f_implies(premise, conclusion)));
    for (const FormulaPtr& seen : instances)
      if (formula_equal(seen, inst)) return false;
    instances.push_back(inst);
    return false;
  });
  if (out.colourings_of_b == 0)
    throw std::invalid_argument("extension axiom: B is not l-colourable");
  out.instances = instances;
  out.axiom = f_and(std::move(instances));
  return out;
}

// ---------------------------------------------------------------------------
// Theory sentences

struct TheorySentences {
  FormulaPtr phi1;               // xi is an equivalence relation off theta_0
  FormulaPtr phi2;               // a copy of U spans all xi-classes
  std::vector<FormulaPtr> psi;   // one T_iso sentence per supplied catalog level
};

inline FormulaPtr build_phi1(const FormulaPtr& xi) {
  auto xi_at = [&](const std::string& a, const std::string& b) {
    return rename_free(xi, {{"x", a}, {"y", b}});
  };
  FormulaPtr refl = f_forall("u", f_implies(f_not(f_theta({}, "u")), xi_at("u", "u")));
  FormulaPtr sym = f_forall_many(
      {"u", "v"},
      f_implies(f_and({f_not(f_theta({}, "u")), f_not(f_theta({}, "v")), xi_at("u", "v")}),
                xi_at("v", "u")));
  FormulaPtr trans = f_forall_many(
      {"u", "v", "w"},
      f_implies(f_and({f_not(f_theta({}, "u")), f_not(f_theta({}, "v")),
                       f_not(f_theta({}, "w")), xi_at("u", "v"), xi_at("v", "w")}),
                xi_at("u", "w")));
  return f_and({refl, sym, trans});
}

inline FormulaPtr build_phi2(const RelStructure& U, const FormulaPtr& xi, unsigned l) {
  const std::size_t p = U.universe.size();
  if (p < l) throw std::invalid_argument("phi2: |U| < l");
  std::vector<std::string> names = default_var_names(p, "u");
  FormulaPtr chi_u = characteristic_formula(
      U, std::vector<Point>(U.universe.begin(), U.universe.end()), names);
  auto xi_at = [&](const std::string& a, const std::string& b) {
    return rename_free(xi, {{"x", a}, {"y", b}});
  };

  std::vector<FormulaPtr> subsets;
  std::vector<std::size_t> idx;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (idx.size() == l) {
      std::vector<FormulaPtr> block;
      for (std::size_t i : idx) block.push_back(f_not(f_theta({}, names[i])));
      for (std::size_t i : idx)
        for (std::size_t j : idx)
          if (i != j) block.push_back(f_not(xi_at(names[i], names[j])));
      std::vector<FormulaPtr> cover{f_theta({}, "yc")};
      for (std::size_t i : idx) cover.push_back(xi_at("yc", names[i]));
      block.push_back(f_forall("yc", f_or(std::move(cover))));
      subsets.push_back(f_and(std::move(block)));
      return;
    }
    for (std::size_t i = start; i < p; ++i) {
      idx.push_back(i);
      rec(i + 1);
      idx.pop_back();
    }
  };
  rec(0);
  return f_exists_many(names, f_and({chi_u, f_or(std::move(subsets))}));
}

// psi_n: every closed substructure of cardinality s(n) is isomorphic to a
// member of the catalog (characteristic formulas over all permutations).
inline FormulaPtr build_psi(const std::vector<RelStructure>& catalog) {
  if (catalog.empty()) throw std::invalid_argument("psi: empty catalog");
  const std::size_t s = catalog.front().universe.size();
  for (const RelStructure& M : catalog)
    if (M.universe.size() != s) throw std::invalid_argument("psi: catalog size mismatch");
  if (s > 6) throw ResourceError("psi: permutation disjunction too large");

  std::vector<std::string> names = default_var_names(s, "p");
  std::vector<FormulaPtr> distinct;
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j) distinct.push_back(f_not(f_eq(names[i], names[j])));
  FormulaPtr closed = build_eta(names, "y_eta");

  std::vector<FormulaPtr> options;
  for (const RelStructure& M : catalog) {
    std::vector<std::size_t> perm(s);
    for (std::size_t i = 0; i < s; ++i) perm[i] = i;
    do {
      std::vector<std::string> permuted;
      for (std::size_t i = 0; i < s; ++i) permuted.push_back(names[perm[i]]);
      options.push_back(characteristic_formula(
          M, std::vector<Point>(M.universe.begin(), M.universe.end()), permuted));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return f_forall_many(
      names, f_implies(f_and({f_and(std::move(distinct)), closed}), f_or(std::move(options))));
}

inline TheorySentences build_theory_sentences(const RelStructure& U, const FormulaPtr& xi,
                                              unsigned l,
                                              const std::vector<std::vector<RelStructure>>& catalogs) {
  TheorySentences out;
  out.phi1 = build_phi1(xi);
  out.phi2 = build_phi2(U, xi, l);
  for (const auto& level : catalogs) out.psi.push_back(build_psi(level));
  return out;
}

// The labelled axiomatisation of the limit theory. The pregeometry part is
// not sentences here: models are matched against the closure oracle, which
// already enforces the closure axioms for the intended structures.
struct LimitTheory {
  FormulaPtr t_xi;                  // phi1 and phi2
  std::vector<FormulaPtr> t_ext;    // colour compatible extension axioms
  std::vector<FormulaPtr> t_iso;    // one sentence per catalogued dimension
};

inline LimitTheory assemble_limit_theory(const TheorySentences& ts,
                                         std::vector<FormulaPtr> extension_axioms) {
  LimitTheory t;
  t.t_xi = f_and({ts.phi1, ts.phi2});
  t.t_ext = std::move(extension_axioms);
  t.t_iso = ts.psi;
  return t;
}

// Syntactic audit: a forall-block then exists-block whose matrix is
// quantifier-free except for eta subformulas (a single forall over an
// implication from a theta atom) and occurrences of the supplied xi. A
// top-level conjunction of such sentences (the extension axiom) passes iff
// every conjunct does.
inline bool is_forall_exists_shape(const FormulaPtr& f, const FormulaPtr& xi) {
  if (f->op == Formula::Op::And) {
    for (const FormulaPtr& k : f->kids)
      if (!is_forall_exists_shape(k, xi)) return false;
    return true;
  }
  std::function<bool(const FormulaPtr&)> matrix_ok = [&](const FormulaPtr& g) -> bool {
    if (formula_equal(g, xi)) return true;
    // eta shape: forall y (theta(...) -> disjunction of equalities)
    if (g->op == Formula::Op::Forall) {
      const FormulaPtr& body = g->kids[0];
      if (body->op != Formula::Op::Implies) return false;
      if (body->kids[0]->op != Formula::Op::Theta) return false;
      return is_quantifier_free(body->kids[1]);
    }
    if (g->op == Formula::Op::Exists) {
      // a renamed copy of xi's existential block is fine
      return is_existential(g);
    }
    for (const FormulaPtr& k : g->kids)
      if (!matrix_ok(k)) return false;
    return true;
  };
  const Formula* p = f.get();
  while (p->op == Formula::Op::Forall) p = p->kids[0].get();
  while (p->op == Formula::Op::Exists) p = p->kids[0].get();
  return matrix_ok(std::make_shared<Formula>(*p));
}

}  // namespace pregeomzol
