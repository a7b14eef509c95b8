#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pregeomzol/colouring.hpp"
#include "pregeomzol/sampling.hpp"
#include "pregeomzol/structures.hpp"

namespace pregeomzol {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Structures <-> JSON. Field order is fixed so that serialization round-trips
// byte-exactly.

inline Json pg_to_json(const Pregeometry& pg) {
  Json j;
  j["kind"] = kind_name(pg.kind());
  if (pg.kind() != Kind::Trivial) j["q"] = pg.q();
  j["rank"] = pg.rank();
  return j;
}

inline Pregeometry pg_from_json(const Json& j) {
  Kind kind = kind_from_name(j.at("kind").get<std::string>());
  unsigned rank = j.at("rank").get<unsigned>();
  switch (kind) {
    case Kind::Trivial: return Pregeometry::trivial(rank);
    case Kind::Linear: return Pregeometry::linear(j.at("q").get<unsigned>(), rank);
    case Kind::Affine: return Pregeometry::affine(j.at("q").get<unsigned>(), rank - 1);
    case Kind::Projective: return Pregeometry::projective(j.at("q").get<unsigned>(), rank - 1);
  }
  throw std::invalid_argument("bad kind");
}

inline Json vocab_to_json(const Vocabulary& v) {
  Json arr = Json::array();
  for (const RelSymbol& s : v.symbols) arr.push_back({{"name", s.name}, {"arity", s.arity}});
  return arr;
}

inline Vocabulary vocab_from_json(const Json& arr, bool symmetric_irreflexive) {
  std::vector<RelSymbol> symbols;
  for (const Json& s : arr)
    symbols.push_back({s.at("name").get<std::string>(), s.at("arity").get<unsigned>()});
  return Vocabulary(symbols, symmetric_irreflexive);
}

inline Json rel_to_json(const RelStructure& S) {
  Json j = pg_to_json(S.pg);
  if (S.universe.size() != S.pg.universe_size()) j["universe"] = S.universe;
  j["mode"] = S.vocab.symmetric_irreflexive ? "symmetric_irreflexive" : "ordered";
  j["vocab"] = vocab_to_json(S.vocab);
  Json rels = Json::object();
  for (unsigned s = 0; s < S.vocab.symbols.size(); ++s) {
    Json tuples = Json::array();
    for (const Tuple& t : S.rels[s]) tuples.push_back(t);
    rels[S.vocab.symbols[s].name] = tuples;
  }
  j["relations"] = rels;
  return j;
}

inline RelStructure rel_from_json(const Json& j) {
  Pregeometry pg = pg_from_json(j);
  Vocabulary vocab = vocab_from_json(
      j.at("vocab"), j.at("mode").get<std::string>() == "symmetric_irreflexive");
  RelStructure S = j.contains("universe")
                       ? RelStructure(pg, j.at("universe").get<PointSet>(), vocab)
                       : RelStructure(pg, vocab);
  if (pg.closure(S.universe) != S.universe)
    throw std::invalid_argument("structure universe is not closed");
  for (unsigned s = 0; s < vocab.symbols.size(); ++s) {
    const Json& tuples = j.at("relations").at(vocab.symbols[s].name);
    for (const Json& t : tuples) S.add_tuple(s, t.get<Tuple>());
  }
  return S;
}

inline Json coloured_to_json(const ColouredStructure& M) {
  Json j = rel_to_json(M.base);
  j["l"] = M.l;
  Json colours = Json::array();
  for (const Flat& f : FlatPartition::of(M.base).flats) {
    Point rep = f.members.front();
    for (Point p : f.members)
      if (M.colour_of(p) != 0) { rep = p; break; }
    colours.push_back({{"basis", f.basis}, {"colour", M.colour_of(rep)}});
  }
  j["colours"] = colours;
  return j;
}

inline ColouredStructure coloured_from_json(const Json& j) {
  RelStructure base = rel_from_json(j);
  ColouredStructure M(base, j.at("l").get<unsigned>());
  for (const Json& c : j.at("colours")) {
    PointSet basis = c.at("basis").get<PointSet>();
    int colour = c.at("colour").get<int>();
    PointSet cl0 = base.pg.closure_of_empty();
    for (Point p : base.pg.closure(basis))
      if (!contains_point(cl0, p)) {
        if (colour < 1 || static_cast<unsigned>(colour) > M.l)
          throw std::invalid_argument("colour out of range");
        M.colour[p] = colour;
      }
  }
  return M;
}

inline Json flat_to_json(const Flat& f) {
  return Json{{"basis", f.basis}, {"rank", f.rank}, {"members", f.members}};
}

inline Json mono_report_to_json(const MonoReport& rep) {
  Json j;
  j["colouring"] = rep.colouring;
  Json ws = Json::array();
  for (const Flat& f : rep.maximal) ws.push_back(flat_to_json(f));
  j["maximal_monochromatic"] = ws;
  j["e"] = rep.e;
  j["t"] = rep.t;
  return j;
}

inline Json violations_to_json(const std::vector<Violation>& vs) {
  Json arr = Json::array();
  for (const Violation& v : vs)
    arr.push_back({{"condition", v.condition}, {"points", v.points}, {"note", v.note}});
  return arr;
}

inline Json estimate_to_json(const Estimate& e) {
  return Json{{"n", e.n},           {"event", e.event},
              {"estimate", e.estimate}, {"ci_lo", e.ci_lo},
              {"ci_hi", e.ci_hi},   {"samples", e.samples},
              {"budget_exceeded", e.budget_exceeded}, {"seed", e.seed}};
}

// ---------------------------------------------------------------------------
// Files

inline void write_atomic(const std::filesystem::path& path, const std::string& data) {
  std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << data;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) {
    append_row(header);
  }

  template <typename... Ts>
  void row(const Ts&... vals) {
    std::vector<std::string> cells;
    (cells.push_back(cell(vals)), ...);
    append_row(cells);
  }

  const std::string& str() const { return data_; }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
  }
  template <typename T>
  static std::string cell(const T& v) {
    return std::to_string(v);
  }

  void append_row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_) throw InternalError("csv row arity mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) data_ += ',';
      data_ += cells[i];
    }
    data_ += '\n';
  }

  std::size_t cols_;
  std::string data_;
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace pregeomzol
