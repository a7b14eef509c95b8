#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pregeomzol/common.hpp"

namespace pregeomzol {

enum class Kind { Trivial, Linear, Affine, Projective };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Trivial: return "trivial";
    case Kind::Linear: return "linear";
    case Kind::Affine: return "affine";
    case Kind::Projective: return "projective";
  }
  return "?";
}

inline Kind kind_from_name(const std::string& s) {
  if (s == "trivial") return Kind::Trivial;
  if (s == "linear") return Kind::Linear;
  if (s == "affine") return Kind::Affine;
  if (s == "projective") return Kind::Projective;
  throw std::invalid_argument("unknown pregeometry kind: " + s);
}

using Vec = std::vector<std::uint8_t>;  // coordinate vector over GF(q)

namespace gf {

inline std::uint8_t mul(unsigned q, std::uint8_t a, std::uint8_t b) {
  return static_cast<std::uint8_t>((unsigned(a) * unsigned(b)) % q);
}

inline std::uint8_t add(unsigned q, std::uint8_t a, std::uint8_t b) {
  return static_cast<std::uint8_t>((unsigned(a) + unsigned(b)) % q);
}

inline std::uint8_t sub(unsigned q, std::uint8_t a, std::uint8_t b) {
  return static_cast<std::uint8_t>((unsigned(a) + q - unsigned(b)) % q);
}

inline std::uint8_t inv(unsigned q, std::uint8_t a) {
  for (unsigned j = 1; j < q; ++j)
    if ((unsigned(a) * j) % q == 1) return static_cast<std::uint8_t>(j);
  throw InternalError("gf::inv of zero");
}

inline bool is_prime(unsigned q) {
  if (q < 2) return false;
  for (unsigned d = 2; d * d <= q; ++d)
    if (q % d == 0) return false;
  return true;
}

}  // namespace gf

// Row-reduced echelon basis over GF(q) with incremental absorption.
class GfBasis {
 public:
  GfBasis(unsigned q, unsigned dim) : q_(q), dim_(dim) {}

  // Reduces v against the current rows; returns the residue.
  Vec reduce(Vec v) const {
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      std::uint8_t c = v[pivots_[r]];
      if (c != 0) {
        for (unsigned j = 0; j < dim_; ++j)
          v[j] = gf::sub(q_, v[j], gf::mul(q_, c, rows_[r][j]));
      }
    }
    return v;
  }

  bool contains(const Vec& v) const {
    Vec r = reduce(v);
    for (std::uint8_t c : r)
      if (c != 0) return false;
    return true;
  }

  // Returns true if v was independent of the rows so far.
  bool absorb(const Vec& v) {
    Vec r = reduce(v);
    unsigned piv = dim_;
    for (unsigned j = 0; j < dim_; ++j)
      if (r[j] != 0) { piv = j; break; }
    if (piv == dim_) return false;
    std::uint8_t s = gf::inv(q_, r[piv]);
    for (unsigned j = 0; j < dim_; ++j) r[j] = gf::mul(q_, s, r[j]);
    // clear the new pivot column in existing rows, keep rows pivot-sorted
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      std::uint8_t c = rows_[i][piv];
      if (c != 0)
        for (unsigned j = 0; j < dim_; ++j)
          rows_[i][j] = gf::sub(q_, rows_[i][j], gf::mul(q_, c, r[j]));
    }
    std::size_t pos = 0;
    while (pos < pivots_.size() && pivots_[pos] < piv) ++pos;
    rows_.insert(rows_.begin() + pos, r);
    pivots_.insert(pivots_.begin() + pos, piv);
    return true;
  }

  unsigned rank() const { return static_cast<unsigned>(rows_.size()); }
  const std::vector<Vec>& rows() const { return rows_; }

  // Invokes fn on every vector of the span, zero included (q^rank calls).
  void for_each_span(const std::function<void(const Vec&)>& fn) const {
    std::vector<std::uint8_t> coeff(rows_.size(), 0);
    Vec v(dim_, 0);
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < rows_.size(); ++i) total *= q_;
    for (std::uint64_t idx = 0;; ++idx) {
      v.assign(dim_, 0);
      std::uint64_t rem = idx;
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        std::uint8_t c = static_cast<std::uint8_t>(rem % q_);
        rem /= q_;
        if (c != 0)
          for (unsigned j = 0; j < dim_; ++j)
            v[j] = gf::add(q_, v[j], gf::mul(q_, c, rows_[i][j]));
      }
      fn(v);
      if (idx + 1 == total) break;
    }
  }

 private:
  unsigned q_, dim_;
  std::vector<Vec> rows_;
  std::vector<unsigned> pivots_;
};

// A closed set with its canonical generators. Two flats of the same
// pregeometry are equal iff their member lists are equal.
struct Flat {
  PointSet basis;    // closure(basis) == members; canonical for the member set
  PointSet members;  // sorted
  unsigned rank = 0;

  bool operator==(const Flat& o) const { return members == o.members; }
  bool operator<(const Flat& o) const { return members < o.members; }
};

// Finite pregeometry over a prime field (or the trivial one). Immutable;
// all queries are pure, so concurrent reads are safe.
//
// `rank()` is always the matroid rank (size of a maximal independent set):
// linear GF(q)^n has rank n, the affine space on q^n points has rank n+1,
// and the projective space of projective dimension n has rank n+1. The
// conventional family index (dimension) is mapped by family_member().
class Pregeometry {
 public:
  static Pregeometry trivial(unsigned size) {
    Pregeometry pg;
    pg.kind_ = Kind::Trivial;
    pg.rank_ = size;
    pg.universe_ = size;
    return pg;
  }

  static Pregeometry linear(unsigned q, unsigned n) {
    Pregeometry pg;
    pg.kind_ = Kind::Linear;
    pg.init_field(q);
    pg.rank_ = n;
    pg.universe_ = pow_check(q, n);
    return pg;
  }

  // n = affine dimension; q^n points, matroid rank n+1
  static Pregeometry affine(unsigned q, unsigned n) {
    Pregeometry pg;
    pg.kind_ = Kind::Affine;
    pg.init_field(q);
    pg.rank_ = n + 1;
    pg.universe_ = pow_check(q, n);
    return pg;
  }

  // n = projective dimension; (q^(n+1)-1)/(q-1) points, matroid rank n+1
  static Pregeometry projective(unsigned q, unsigned n) {
    Pregeometry pg;
    pg.kind_ = Kind::Projective;
    pg.init_field(q);
    pg.rank_ = n + 1;
    pg.universe_ = (pow_check(q, n + 1) - 1) / (q - 1);
    return pg;
  }

  // Family index n in the dimension convention: dimension of the vector,
  // affine or projective space. Trivial family: universe of n+1 points.
  static Pregeometry family_member(Kind k, unsigned q, unsigned n) {
    switch (k) {
      case Kind::Trivial: return trivial(n + 1);
      case Kind::Linear: return linear(q, n);
      case Kind::Affine: return affine(q, n);
      case Kind::Projective: return projective(q, n);
    }
    throw std::invalid_argument("bad kind");
  }

  Kind kind() const { return kind_; }
  unsigned q() const { return q_; }
  unsigned rank() const { return rank_; }
  std::size_t universe_size() const { return universe_; }

  bool same_space(const Pregeometry& o) const {
    return kind_ == o.kind_ && q_ == o.q_ && rank_ == o.rank_;
  }
  bool same_family(const Pregeometry& o) const {
    return kind_ == o.kind_ && q_ == o.q_;
  }

  void check_point(Point p) const {
    if (p >= universe_) throw std::invalid_argument("point out of range");
  }

  PointSet closure_of_empty() const {
    switch (kind_) {
      case Kind::Linear: return {encode(Vec(coord_dim(), 0))};
      default: return {};
    }
  }

  PointSet closure(const PointSet& s) const {
    for (Point p : s) check_point(p);
    switch (kind_) {
      case Kind::Trivial: {
        PointSet out = s;
        sort_unique(out);
        return out;
      }
      case Kind::Linear: {
        GfBasis b(q_, coord_dim());
        for (Point p : s) b.absorb(decode(p));
        PointSet out;
        b.for_each_span([&](const Vec& v) { out.push_back(encode(v)); });
        sort_unique(out);
        return out;
      }
      case Kind::Affine: {
        if (s.empty()) return {};
        Vec p0 = decode(s.front());
        GfBasis b(q_, coord_dim());
        for (Point p : s) b.absorb(vec_sub(decode(p), p0));
        PointSet out;
        b.for_each_span([&](const Vec& v) { out.push_back(encode(vec_add(v, p0))); });
        sort_unique(out);
        return out;
      }
      case Kind::Projective: {
        GfBasis b(q_, coord_dim());
        for (Point p : s) b.absorb(decode(p));
        PointSet out;
        b.for_each_span([&](const Vec& v) {
          if (auto n = normalize(v)) out.push_back(encode(*n));
        });
        sort_unique(out);
        return out;
      }
    }
    throw InternalError("closure: bad kind");
  }

  // b in closure(args); theta_k with k = args.size()
  bool theta(const Tuple& args, Point b) const {
    for (Point p : args) check_point(p);
    check_point(b);
    switch (kind_) {
      case Kind::Trivial:
        return std::find(args.begin(), args.end(), b) != args.end();
      case Kind::Linear: {
        GfBasis bs(q_, coord_dim());
        for (Point p : args) bs.absorb(decode(p));
        return bs.contains(decode(b));
      }
      case Kind::Affine: {
        if (args.empty()) return false;
        Vec p0 = decode(args.front());
        GfBasis bs(q_, coord_dim());
        for (Point p : args) bs.absorb(vec_sub(decode(p), p0));
        return bs.contains(vec_sub(decode(b), p0));
      }
      case Kind::Projective: {
        GfBasis bs(q_, coord_dim());
        for (Point p : args) bs.absorb(decode(p));
        return bs.contains(decode(b));
      }
    }
    throw InternalError("theta: bad kind");
  }

  unsigned rank_of(const Tuple& s) const {
    for (Point p : s) check_point(p);
    switch (kind_) {
      case Kind::Trivial:
        return static_cast<unsigned>(as_point_set(s).size());
      case Kind::Linear:
      case Kind::Projective: {
        GfBasis b(q_, coord_dim());
        for (Point p : s) b.absorb(decode(p));
        return b.rank();
      }
      case Kind::Affine: {
        if (s.empty()) return 0;
        Vec p0 = decode(s.front());
        GfBasis b(q_, coord_dim());
        for (Point p : s) b.absorb(vec_sub(decode(p), p0));
        return 1 + b.rank();
      }
    }
    throw InternalError("rank_of: bad kind");
  }

  bool is_independent(const PointSet& s) const {
    PointSet cl0 = closure_of_empty();
    for (Point p : s)
      if (contains_point(cl0, p)) return false;
    return rank_of(Tuple(s.begin(), s.end())) == s.size();
  }

  // Closure of s with the canonical basis for the resulting member set.
  Flat flat_of(const PointSet& s) const {
    Flat f;
    f.members = closure(s);
    f.rank = rank_of(Tuple(f.members.begin(), f.members.end()));
    f.basis = canonical_basis(f.members);
    return f;
  }

  std::vector<Flat> one_dim_flats() const {
    PointSet all(universe_);
    for (std::size_t i = 0; i < universe_; ++i) all[i] = static_cast<Point>(i);
    return one_dim_flats_within(all);
  }

  // Partition of universe \ closure(empty) into rank-1 flats, ordered by
  // their minimal point outside closure(empty).
  std::vector<Flat> one_dim_flats_within(const PointSet& universe) const {
    PointSet cl0 = closure_of_empty();
    std::vector<bool> seen(universe_, false);
    std::vector<Flat> out;
    for (Point p : universe) {
      if (seen[p] || contains_point(cl0, p)) continue;
      Flat f = flat_of({p});
      for (Point m : f.members) seen[m] = true;
      out.push_back(std::move(f));
    }
    return out;
  }

  std::vector<Flat> flats_of_rank(unsigned k) const {
    PointSet all(universe_);
    for (std::size_t i = 0; i < universe_; ++i) all[i] = static_cast<Point>(i);
    return flats_of_rank_within(k, all);
  }

  // All rank-k flats whose members lie inside `universe` (which must be
  // closed), each exactly once, sorted by member list.
  std::vector<Flat> flats_of_rank_within(unsigned k, const PointSet& universe) const {
    if (k == 0) {
      Flat f = flat_of({});
      if (!subset_of(f.members, universe)) return {};
      return {f};
    }
    std::vector<Flat> level = one_dim_flats_within(universe);
    const std::uint64_t cap = max_cells_cap();
    for (unsigned r = 2; r <= k; ++r) {
      std::set<PointSet> seen;
      std::vector<Flat> next;
      for (const Flat& f : level) {
        for (Point p : universe) {
          if (contains_point(f.members, p)) continue;
          PointSet gen = f.basis;
          gen.push_back(p);
          sort_unique(gen);
          Flat g = flat_of(gen);
          if (!subset_of(g.members, universe)) continue;
          if (seen.insert(g.members).second) {
            next.push_back(std::move(g));
            if (next.size() > cap)
              throw ResourceError("flats_of_rank: cap exceeded");
          }
        }
      }
      std::sort(next.begin(), next.end());
      level = std::move(next);
    }
    std::sort(level.begin(), level.end());
    return level;
  }

  // D(A): number of rank-1 flats contained in the flat.
  std::uint64_t d_count(const Flat& f) const {
    PointSet cl0 = closure_of_empty();
    std::vector<bool> seen(universe_, false);
    std::uint64_t n = 0;
    for (Point p : f.members) {
      if (seen[p] || contains_point(cl0, p)) continue;
      for (Point m : closure({p})) seen[m] = true;
      ++n;
    }
    return n;
  }

  // First maximal independent subset of `pool` in ascending order, capped at
  // `want` points.
  PointSet greedy_independent(const PointSet& pool, unsigned want) const {
    PointSet cl0 = closure_of_empty();
    PointSet chosen;
    for (Point p : pool) {
      if (chosen.size() >= want) break;
      if (contains_point(cl0, p)) continue;
      if (theta(Tuple(chosen.begin(), chosen.end()), p)) continue;
      chosen.push_back(p);
    }
    return chosen;
  }

  Vec decode(Point p) const {
    switch (kind_) {
      case Kind::Trivial: throw InternalError("decode on trivial pregeometry");
      case Kind::Linear:
      case Kind::Affine: {
        Vec v(coord_dim());
        std::uint64_t x = p;
        for (unsigned i = 0; i < coord_dim(); ++i) {
          v[i] = static_cast<std::uint8_t>(x % q_);
          x /= q_;
        }
        return v;
      }
      case Kind::Projective: {
        const std::vector<Vec> reps = proj_reps();
        if (p >= reps.size()) throw std::invalid_argument("point out of range");
        return reps[p];
      }
    }
    throw InternalError("decode: bad kind");
  }

  Point encode(const Vec& v) const {
    switch (kind_) {
      case Kind::Trivial: throw InternalError("encode on trivial pregeometry");
      case Kind::Linear:
      case Kind::Affine: {
        std::uint64_t x = 0;
        for (unsigned i = coord_dim(); i-- > 0;) x = x * q_ + v[i];
        return static_cast<Point>(x);
      }
      case Kind::Projective: {
        auto n = normalize(v);
        if (!n) throw std::invalid_argument("projective encode of zero vector");
        const std::vector<Vec> reps = proj_reps();
        for (std::size_t i = 0; i < reps.size(); ++i)
          if (reps[i] == *n) return static_cast<Point>(i);
        throw InternalError("projective encode: vector not found");
      }
    }
    throw InternalError("encode: bad kind");
  }

  Vec vec_add(const Vec& a, const Vec& b) const {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = gf::add(q_, a[i], b[i]);
    return r;
  }

  Vec vec_sub(const Vec& a, const Vec& b) const {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = gf::sub(q_, a[i], b[i]);
    return r;
  }

  unsigned coord_dim() const {
    switch (kind_) {
      case Kind::Trivial: return 0;
      case Kind::Linear: return rank_;
      case Kind::Affine: return rank_ - 1;
      case Kind::Projective: return rank_;
    }
    return 0;
  }

 private:
  Pregeometry() = default;

  void init_field(unsigned q) {
    if (!gf::is_prime(q)) throw std::invalid_argument("q must be prime");
    q_ = q;
  }

  static std::size_t pow_check(unsigned q, unsigned n) {
    std::uint64_t x = 1;
    for (unsigned i = 0; i < n; ++i) {
      x *= q;
      if (x > max_cells_cap()) throw ResourceError("universe exceeds cell cap");
    }
    return static_cast<std::size_t>(x);
  }

  // scale so the first nonzero coordinate equals 1; nullopt for zero
  std::optional<Vec> normalize(const Vec& v) const {
    unsigned first = coord_dim();
    for (unsigned i = 0; i < coord_dim(); ++i)
      if (v[i] != 0) { first = i; break; }
    if (first == coord_dim()) return std::nullopt;
    std::uint8_t s = gf::inv(q_, v[first]);
    Vec out(coord_dim());
    for (unsigned i = 0; i < coord_dim(); ++i) out[i] = gf::mul(q_, s, v[i]);
    return out;
  }

  // normalized representatives in ascending base-q integer order
  std::vector<Vec> proj_reps() const {
    std::vector<Vec> reps;
    std::uint64_t total = 1;
    for (unsigned i = 0; i < coord_dim(); ++i) total *= q_;
    for (std::uint64_t x = 1; x < total; ++x) {
      Vec v(coord_dim());
      std::uint64_t rem = x;
      for (unsigned i = 0; i < coord_dim(); ++i) {
        v[i] = static_cast<std::uint8_t>(rem % q_);
        rem /= q_;
      }
      auto n = normalize(v);
      if (n && *n == v) reps.push_back(v);
    }
    return reps;
  }

  PointSet canonical_basis(const PointSet& members) const {
    switch (kind_) {
      case Kind::Trivial: return members;
      case Kind::Linear:
      case Kind::Projective: {
        GfBasis b(q_, coord_dim());
        for (Point p : members) b.absorb(decode(p));
        PointSet out;
        for (const Vec& row : b.rows()) out.push_back(encode(row));
        std::sort(out.begin(), out.end());
        return out;
      }
      case Kind::Affine: {
        if (members.empty()) return {};
        Vec p0 = decode(members.front());
        GfBasis b(q_, coord_dim());
        for (Point p : members) b.absorb(vec_sub(decode(p), p0));
        PointSet out{members.front()};
        for (const Vec& row : b.rows()) out.push_back(encode(vec_add(row, p0)));
        std::sort(out.begin(), out.end());
        return out;
      }
    }
    throw InternalError("canonical_basis: bad kind");
  }

  Kind kind_ = Kind::Trivial;
  unsigned q_ = 0;
  unsigned rank_ = 0;
  std::size_t universe_ = 0;
};

// t(d) table and t = max{d : t(d) <= l} for a pregeometry family.
struct TThreshold {
  std::vector<std::uint64_t> table;  // table[d] = D of a rank-d flat
  unsigned t = 0;
};

inline TThreshold t_threshold(Kind kind, unsigned q, unsigned l) {
  if (l < 2) throw std::invalid_argument("t_threshold requires l >= 2");
  TThreshold out;
  out.table.push_back(0);  // rank-0 flat has no rank-1 subflats
  for (unsigned d = 1;; ++d) {
    Pregeometry host = kind == Kind::Trivial
                           ? Pregeometry::trivial(d)
                           : Pregeometry::family_member(kind, q, d + 1);
    PointSet all(host.universe_size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Point>(i);
    PointSet gen = host.greedy_independent(all, d);
    if (gen.size() < d) throw InternalError("t_threshold: host too small");
    std::uint64_t dcount = host.d_count(host.flat_of(gen));
    if (dcount < out.table.back()) throw InternalError("t(d) not monotone");
    out.table.push_back(dcount);
    if (dcount > l) break;
  }
  out.t = static_cast<unsigned>(out.table.size()) - 2;
  return out;
}

// Bijection closure(src) -> closure(dst) mapping src[i] to dst[i] and
// commuting with closure. Both tuples must be independent, of equal length,
// in spaces of the same kind and field.
inline std::vector<std::pair<Point, Point>> extend_independent_iso(
    const Pregeometry& src_pg, const Tuple& src, const Pregeometry& dst_pg,
    const Tuple& dst) {
  if (src.size() != dst.size())
    throw std::invalid_argument("extend_independent_iso: length mismatch");
  if (!src_pg.same_family(dst_pg))
    throw std::invalid_argument("extend_independent_iso: kind/field mismatch");
  if (!src_pg.is_independent(as_point_set(src)) || src.size() != as_point_set(src).size() ||
      !dst_pg.is_independent(as_point_set(dst)) || dst.size() != as_point_set(dst).size())
    throw std::invalid_argument("extend_independent_iso: tuples not independent");

  std::vector<std::pair<Point, Point>> map;
  const PointSet domain = src_pg.closure(as_point_set(src));

  if (src_pg.kind() == Kind::Trivial) {
    for (std::size_t i = 0; i < src.size(); ++i) map.emplace_back(src[i], dst[i]);
    std::sort(map.begin(), map.end());
    return map;
  }
  if (src.empty() && domain.empty()) return map;  // affine/projective rank 0

  const unsigned q = src_pg.q();
  const unsigned k = static_cast<unsigned>(src.size());

  // coordinates of target w.r.t. basis vectors, by fresh elimination
  auto solve = [&](const std::vector<Vec>& basis, Vec target,
                   unsigned dim) -> Vec {
    std::vector<Vec> rows = basis;             // working copies
    std::vector<Vec> coeff(rows.size());       // row ops mirrored on identity
    for (std::size_t i = 0; i < rows.size(); ++i) {
      coeff[i].assign(rows.size(), 0);
      coeff[i][i] = 1;
    }
    Vec tcoeff(rows.size(), 0);
    std::vector<bool> used(rows.size(), false);
    for (unsigned col = 0; col < dim; ++col) {
      std::size_t piv = rows.size();
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (!used[i] && rows[i][col] != 0) { piv = i; break; }
      if (piv == rows.size()) continue;
      used[piv] = true;
      std::uint8_t s = gf::inv(q, rows[piv][col]);
      for (unsigned j = 0; j < dim; ++j) rows[piv][j] = gf::mul(q, s, rows[piv][j]);
      for (std::size_t i = 0; i < coeff[piv].size(); ++i)
        coeff[piv][i] = gf::mul(q, s, coeff[piv][i]);
      auto eliminate = [&](Vec& row, Vec& cf) {
        std::uint8_t c = row[col];
        if (c == 0) return;
        for (unsigned j = 0; j < dim; ++j)
          row[j] = gf::sub(q, row[j], gf::mul(q, c, rows[piv][j]));
        for (std::size_t i = 0; i < cf.size(); ++i)
          cf[i] = gf::sub(q, cf[i], gf::mul(q, c, coeff[piv][i]));
      };
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (i != piv) eliminate(rows[i], coeff[i]);
      eliminate(target, tcoeff);
    }
    for (std::uint8_t c : target)
      if (c != 0) throw InternalError("extend_independent_iso: solve failed");
    return tcoeff;
  };

  if (src_pg.kind() == Kind::Linear || src_pg.kind() == Kind::Projective) {
    std::vector<Vec> sb, db;
    for (Point p : src) sb.push_back(src_pg.decode(p));
    for (Point p : dst) db.push_back(dst_pg.decode(p));
    for (Point x : domain) {
      Vec lambda = solve(sb, src_pg.decode(x), src_pg.coord_dim());
      Vec y(dst_pg.coord_dim(), 0);
      for (unsigned i = 0; i < k; ++i)
        if (lambda[i] != 0)
          for (unsigned j = 0; j < dst_pg.coord_dim(); ++j)
            y[j] = gf::add(q, y[j], gf::mul(q, lambda[i], db[i][j]));
      map.emplace_back(x, dst_pg.encode(y));
    }
  } else {  // Affine
    Vec s0 = src_pg.decode(src[0]), d0 = dst_pg.decode(dst[0]);
    std::vector<Vec> sb, db;
    for (unsigned i = 1; i < k; ++i) {
      sb.push_back(src_pg.vec_sub(src_pg.decode(src[i]), s0));
      db.push_back(dst_pg.vec_sub(dst_pg.decode(dst[i]), d0));
    }
    for (Point x : domain) {
      Vec lambda = sb.empty() ? Vec{}
                              : solve(sb, src_pg.vec_sub(src_pg.decode(x), s0),
                                      src_pg.coord_dim());
      Vec y = d0;
      for (std::size_t i = 0; i < db.size(); ++i)
        if (lambda[i] != 0)
          for (unsigned j = 0; j < dst_pg.coord_dim(); ++j)
            y[j] = gf::add(q, y[j], gf::mul(q, lambda[i], db[i][j]));
      map.emplace_back(x, dst_pg.encode(y));
    }
  }
  std::sort(map.begin(), map.end());
  return map;
}

}  // namespace pregeomzol
