#pragma once

#include <cctype>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pregeomzol/structures.hpp"

namespace pregeomzol {

// First-order formulas over equality, the closure predicates theta_k,
// relation atoms and colour atoms P_i. Immutable trees shared by pointer.
struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  enum class Op {
    True, False, Eq, Theta, Rel, Col,
    Not, And, Or, Implies, Iff, Forall, Exists
  };

  Op op;
  std::vector<std::string> vars;   // Eq: 2; Theta: k args then the member; Rel: arity; Col: 1; quantifier: 1
  std::string rel_name;            // Rel
  int colour = 0;                  // Col
  std::vector<FormulaPtr> kids;
};

inline FormulaPtr f_true() { return std::make_shared<Formula>(Formula{Formula::Op::True, {}, "", 0, {}}); }
inline FormulaPtr f_false() { return std::make_shared<Formula>(Formula{Formula::Op::False, {}, "", 0, {}}); }

inline FormulaPtr f_eq(std::string a, std::string b) {
  return std::make_shared<Formula>(Formula{Formula::Op::Eq, {std::move(a), std::move(b)}, "", 0, {}});
}

// theta_k(args...; member): member lies in the closure of args
inline FormulaPtr f_theta(std::vector<std::string> args, std::string member) {
  args.push_back(std::move(member));
  return std::make_shared<Formula>(Formula{Formula::Op::Theta, std::move(args), "", 0, {}});
}

inline FormulaPtr f_rel(std::string name, std::vector<std::string> args) {
  return std::make_shared<Formula>(Formula{Formula::Op::Rel, std::move(args), std::move(name), 0, {}});
}

inline FormulaPtr f_col(int colour, std::string var) {
  return std::make_shared<Formula>(Formula{Formula::Op::Col, {std::move(var)}, "", colour, {}});
}

inline FormulaPtr f_not(FormulaPtr f) {
  return std::make_shared<Formula>(Formula{Formula::Op::Not, {}, "", 0, {std::move(f)}});
}

inline FormulaPtr f_and(std::vector<FormulaPtr> kids) {
  if (kids.empty()) return f_true();
  if (kids.size() == 1) return kids[0];
  return std::make_shared<Formula>(Formula{Formula::Op::And, {}, "", 0, std::move(kids)});
}

inline FormulaPtr f_or(std::vector<FormulaPtr> kids) {
  if (kids.empty()) return f_false();
  if (kids.size() == 1) return kids[0];
  return std::make_shared<Formula>(Formula{Formula::Op::Or, {}, "", 0, std::move(kids)});
}

inline FormulaPtr f_implies(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<Formula>(Formula{Formula::Op::Implies, {}, "", 0, {std::move(a), std::move(b)}});
}

inline FormulaPtr f_iff(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<Formula>(Formula{Formula::Op::Iff, {}, "", 0, {std::move(a), std::move(b)}});
}

inline FormulaPtr f_forall(std::string var, FormulaPtr f) {
  return std::make_shared<Formula>(Formula{Formula::Op::Forall, {std::move(var)}, "", 0, {std::move(f)}});
}

inline FormulaPtr f_exists(std::string var, FormulaPtr f) {
  return std::make_shared<Formula>(Formula{Formula::Op::Exists, {std::move(var)}, "", 0, {std::move(f)}});
}

inline FormulaPtr f_forall_many(const std::vector<std::string>& vars, FormulaPtr f) {
  for (auto it = vars.rbegin(); it != vars.rend(); ++it) f = f_forall(*it, f);
  return f;
}

inline FormulaPtr f_exists_many(const std::vector<std::string>& vars, FormulaPtr f) {
  for (auto it = vars.rbegin(); it != vars.rend(); ++it) f = f_exists(*it, f);
  return f;
}

inline void collect_bound_names(const FormulaPtr& f, std::vector<std::string>& out) {
  if (f->op == Formula::Op::Forall || f->op == Formula::Op::Exists)
    out.push_back(f->vars[0]);
  for (auto& k : f->kids) collect_bound_names(k, out);
}

// Renames free variable occurrences; bound names shadow as usual.
inline FormulaPtr rename_free(const FormulaPtr& f,
                              const std::vector<std::pair<std::string, std::string>>& ren) {
  auto lookup = [&](const std::string& v) -> const std::string& {
    for (auto& [from, to] : ren)
      if (from == v) return to;
    return v;
  };
  switch (f->op) {
    case Formula::Op::True:
    case Formula::Op::False:
      return f;
    case Formula::Op::Eq:
    case Formula::Op::Theta:
    case Formula::Op::Rel:
    case Formula::Op::Col: {
      Formula g = *f;
      for (auto& v : g.vars) v = lookup(v);
      return std::make_shared<Formula>(std::move(g));
    }
    case Formula::Op::Forall:
    case Formula::Op::Exists: {
      std::vector<std::pair<std::string, std::string>> inner;
      for (auto& p : ren)
        if (p.first != f->vars[0]) inner.push_back(p);
      Formula g = *f;
      g.kids = {rename_free(f->kids[0], inner)};
      return std::make_shared<Formula>(std::move(g));
    }
    default: {
      Formula g = *f;
      for (auto& k : g.kids) k = rename_free(k, ren);
      return std::make_shared<Formula>(std::move(g));
    }
  }
}

// ---------------------------------------------------------------------------
// Evaluation (Tarskian semantics by quantifier expansion)

enum class Truth { False = 0, True = 1, Budget = 2 };

inline Truth truth_of(bool b) { return b ? Truth::True : Truth::False; }

struct EvalBudget {
  std::uint64_t max_assignments;     // variable bindings tried
  std::uint64_t max_expansions;      // quantifier nodes entered
  std::uint64_t assignments = 0;
  std::uint64_t expansions = 0;

  EvalBudget()
      : max_assignments(max_assignments_cap()),
        max_expansions(max_assignments_cap()) {}
  EvalBudget(std::uint64_t a, std::uint64_t e) : max_assignments(a), max_expansions(e) {}

  bool spend_assignment() { return ++assignments <= max_assignments; }
  bool spend_expansion() { return ++expansions <= max_expansions; }
};

namespace detail {

struct Env {
  std::vector<std::pair<std::string, Point>> stack;

  Point get(const std::string& v) const {
    for (auto it = stack.rbegin(); it != stack.rend(); ++it)
      if (it->first == v) return it->second;
    throw InternalError("unbound variable in evaluation: " + v);
  }
  void push(const std::string& v, Point p) { stack.emplace_back(v, p); }
  void pop() { stack.pop_back(); }
};

// When the body of a quantifier syntactically forces the bound variable into
// a closure of already-bound arguments, restrict its range to that closure.
inline std::optional<PointSet> closure_range(const RelStructure& S,
                                             const std::string& var,
                                             const FormulaPtr& body, bool forall,
                                             const Env& env) {
  const Formula* probe = body.get();
  if (forall) {
    if (probe->op != Formula::Op::Implies) return std::nullopt;
    probe = probe->kids[0].get();
  }
  std::vector<const Formula*> conjuncts;
  if (probe->op == Formula::Op::And)
    for (auto& k : probe->kids) conjuncts.push_back(k.get());
  else
    conjuncts.push_back(probe);
  for (const Formula* c : conjuncts) {
    if (c->op != Formula::Op::Theta) continue;
    if (c->vars.back() != var) continue;
    Tuple args;
    bool ok = true;
    for (std::size_t i = 0; i + 1 < c->vars.size(); ++i) {
      if (c->vars[i] == var) { ok = false; break; }
      bool bound = false;
      for (auto& [n, p] : env.stack)
        if (n == c->vars[i]) { bound = true; args.push_back(env.get(c->vars[i])); break; }
      if (!bound) { ok = false; break; }
    }
    if (!ok) continue;
    PointSet cl = S.pg.closure(as_point_set(args));
    PointSet range;
    for (Point p : cl)
      if (contains_point(S.universe, p)) range.push_back(p);
    return range;
  }
  return std::nullopt;
}

inline Truth eval_node(const RelStructure& S, const ColouredStructure* C,
                       const FormulaPtr& f, Env& env, EvalBudget& budget) {
  switch (f->op) {
    case Formula::Op::True: return Truth::True;
    case Formula::Op::False: return Truth::False;
    case Formula::Op::Eq:
      return truth_of(env.get(f->vars[0]) == env.get(f->vars[1]));
    case Formula::Op::Theta: {
      Tuple args;
      for (std::size_t i = 0; i + 1 < f->vars.size(); ++i)
        args.push_back(env.get(f->vars[i]));
      return truth_of(S.pg.theta(args, env.get(f->vars.back())));
    }
    case Formula::Op::Rel: {
      int sym = S.vocab.index_of(f->rel_name);
      if (sym < 0) throw std::invalid_argument("unknown relation symbol: " + f->rel_name);
      if (f->vars.size() != S.vocab.symbols[sym].arity)
        throw std::invalid_argument("arity mismatch for relation symbol: " + f->rel_name);
      Tuple t;
      for (auto& v : f->vars) t.push_back(env.get(v));
      return truth_of(S.holds(static_cast<unsigned>(sym), t));
    }
    case Formula::Op::Col: {
      if (C == nullptr)
        throw std::invalid_argument("colour atom evaluated on an uncoloured structure");
      return truth_of(C->colour_of(env.get(f->vars[0])) == f->colour);
    }
    case Formula::Op::Not: {
      Truth t = eval_node(S, C, f->kids[0], env, budget);
      if (t == Truth::Budget) return t;
      return t == Truth::True ? Truth::False : Truth::True;
    }
    case Formula::Op::And: {
      bool budget_hit = false;
      for (auto& k : f->kids) {
        Truth t = eval_node(S, C, k, env, budget);
        if (t == Truth::False) return Truth::False;
        if (t == Truth::Budget) budget_hit = true;
      }
      return budget_hit ? Truth::Budget : Truth::True;
    }
    case Formula::Op::Or: {
      bool budget_hit = false;
      for (auto& k : f->kids) {
        Truth t = eval_node(S, C, k, env, budget);
        if (t == Truth::True) return Truth::True;
        if (t == Truth::Budget) budget_hit = true;
      }
      return budget_hit ? Truth::Budget : Truth::False;
    }
    case Formula::Op::Implies: {
      Truth a = eval_node(S, C, f->kids[0], env, budget);
      if (a == Truth::False) return Truth::True;
      Truth b = eval_node(S, C, f->kids[1], env, budget);
      if (a == Truth::Budget) return b == Truth::True ? Truth::True : Truth::Budget;
      return b;
    }
    case Formula::Op::Iff: {
      Truth a = eval_node(S, C, f->kids[0], env, budget);
      Truth b = eval_node(S, C, f->kids[1], env, budget);
      if (a == Truth::Budget || b == Truth::Budget) return Truth::Budget;
      return truth_of(a == b);
    }
    case Formula::Op::Forall:
    case Formula::Op::Exists: {
      const bool forall = f->op == Formula::Op::Forall;
      if (!budget.spend_expansion()) return Truth::Budget;
      std::optional<PointSet> restricted =
          closure_range(S, f->vars[0], f->kids[0], forall, env);
      const PointSet& range = restricted ? *restricted : S.universe;
      bool budget_hit = false;
      for (Point p : range) {
        if (!budget.spend_assignment()) return Truth::Budget;
        env.push(f->vars[0], p);
        Truth t = eval_node(S, C, f->kids[0], env, budget);
        env.pop();
        if (forall && t == Truth::False) return Truth::False;
        if (!forall && t == Truth::True) return Truth::True;
        if (t == Truth::Budget) budget_hit = true;
      }
      if (budget_hit) return Truth::Budget;
      return forall ? Truth::True : Truth::False;
    }
  }
  throw InternalError("eval: bad op");
}

}  // namespace detail

using Assignment = std::vector<std::pair<std::string, Point>>;

inline Truth evaluate(const RelStructure& S, const FormulaPtr& f,
                      const Assignment& assignment = {}, EvalBudget budget = {}) {
  detail::Env env;
  for (auto& [v, p] : assignment) env.push(v, p);
  return detail::eval_node(S, nullptr, f, env, budget);
}

inline Truth evaluate(const ColouredStructure& M, const FormulaPtr& f,
                      const Assignment& assignment = {}, EvalBudget budget = {}) {
  detail::Env env;
  for (auto& [v, p] : assignment) env.push(v, p);
  return detail::eval_node(M.base, &M, f, env, budget);
}

// ---------------------------------------------------------------------------
// s-expression serialization, round-trip exact

inline void print_sexpr(const FormulaPtr& f, std::ostream& os) {
  switch (f->op) {
    case Formula::Op::True: os << "(true)"; return;
    case Formula::Op::False: os << "(false)"; return;
    case Formula::Op::Eq: os << "(= " << f->vars[0] << " " << f->vars[1] << ")"; return;
    case Formula::Op::Theta:
      os << "(theta";
      for (auto& v : f->vars) os << " " << v;
      os << ")";
      return;
    case Formula::Op::Rel:
      os << "(rel " << f->rel_name;
      for (auto& v : f->vars) os << " " << v;
      os << ")";
      return;
    case Formula::Op::Col: os << "(col " << f->colour << " " << f->vars[0] << ")"; return;
    case Formula::Op::Not:
      os << "(not ";
      print_sexpr(f->kids[0], os);
      os << ")";
      return;
    case Formula::Op::And:
    case Formula::Op::Or: {
      os << (f->op == Formula::Op::And ? "(and" : "(or");
      for (auto& k : f->kids) {
        os << " ";
        print_sexpr(k, os);
      }
      os << ")";
      return;
    }
    case Formula::Op::Implies:
    case Formula::Op::Iff: {
      os << (f->op == Formula::Op::Implies ? "(implies " : "(iff ");
      print_sexpr(f->kids[0], os);
      os << " ";
      print_sexpr(f->kids[1], os);
      os << ")";
      return;
    }
    case Formula::Op::Forall:
    case Formula::Op::Exists: {
      os << (f->op == Formula::Op::Forall ? "(forall " : "(exists ") << f->vars[0] << " ";
      print_sexpr(f->kids[0], os);
      os << ")";
      return;
    }
  }
}

inline std::string to_sexpr(const FormulaPtr& f) {
  std::ostringstream os;
  print_sexpr(f, os);
  return os.str();
}

// indented multi-line rendering for reports; not meant to be parsed back
inline void pretty_print(const FormulaPtr& f, std::ostream& os, int indent = 0) {
  auto pad = [&] { for (int i = 0; i < indent; ++i) os << "  "; };
  switch (f->op) {
    case Formula::Op::And:
    case Formula::Op::Or:
      pad();
      os << (f->op == Formula::Op::And ? "(and\n" : "(or\n");
      for (auto& k : f->kids) pretty_print(k, os, indent + 1);
      pad();
      os << ")\n";
      return;
    case Formula::Op::Not:
    case Formula::Op::Implies:
    case Formula::Op::Iff: {
      pad();
      os << "(" << (f->op == Formula::Op::Not ? "not" : f->op == Formula::Op::Implies ? "implies" : "iff")
         << "\n";
      for (auto& k : f->kids) pretty_print(k, os, indent + 1);
      pad();
      os << ")\n";
      return;
    }
    case Formula::Op::Forall:
    case Formula::Op::Exists:
      pad();
      os << "(" << (f->op == Formula::Op::Forall ? "forall " : "exists ") << f->vars[0] << "\n";
      pretty_print(f->kids[0], os, indent + 1);
      pad();
      os << ")\n";
      return;
    default:
      pad();
      print_sexpr(f, os);
      os << "\n";
      return;
  }
}

inline std::string pretty(const FormulaPtr& f) {
  std::ostringstream os;
  pretty_print(f, os);
  return os.str();
}

namespace detail {

struct SexprParser {
  const std::string& s;
  std::size_t pos = 0;

  explicit SexprParser(const std::string& str) : s(str) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  std::string token() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) &&
           s[pos] != '(' && s[pos] != ')')
      ++pos;
    if (start == pos) throw std::invalid_argument("s-expr: expected token at " + std::to_string(pos));
    return s.substr(start, pos - start);
  }

  void expect(char c) {
    skip_ws();
    if (pos >= s.size() || s[pos] != c)
      throw std::invalid_argument(std::string("s-expr: expected '") + c + "'");
    ++pos;
  }

  bool peek(char c) {
    skip_ws();
    return pos < s.size() && s[pos] == c;
  }

  FormulaPtr parse() {
    expect('(');
    std::string head = token();
    FormulaPtr out;
    if (head == "true") out = f_true();
    else if (head == "false") out = f_false();
    else if (head == "=") {
      std::string a = token(), b = token();
      out = f_eq(a, b);
    } else if (head == "theta") {
      std::vector<std::string> vars;
      while (!peek(')')) vars.push_back(token());
      if (vars.empty()) throw std::invalid_argument("s-expr: theta needs a member argument");
      std::string member = vars.back();
      vars.pop_back();
      out = f_theta(vars, member);
    } else if (head == "rel") {
      std::string name = token();
      std::vector<std::string> vars;
      while (!peek(')')) vars.push_back(token());
      out = f_rel(name, vars);
    } else if (head == "col") {
      std::string c = token(), v = token();
      out = f_col(std::stoi(c), v);
    } else if (head == "not") {
      out = f_not(parse());
    } else if (head == "and" || head == "or") {
      std::vector<FormulaPtr> kids;
      while (!peek(')')) kids.push_back(parse());
      // keep node shape exact for round-trips
      out = std::make_shared<Formula>(Formula{
          head == "and" ? Formula::Op::And : Formula::Op::Or, {}, "", 0, std::move(kids)});
    } else if (head == "implies" || head == "iff") {
      FormulaPtr a = parse(), b = parse();
      out = head == "implies" ? f_implies(a, b) : f_iff(a, b);
    } else if (head == "forall" || head == "exists") {
      std::string v = token();
      FormulaPtr body = parse();
      out = head == "forall" ? f_forall(v, body) : f_exists(v, body);
    } else {
      throw std::invalid_argument("s-expr: unknown head " + head);
    }
    expect(')');
    return out;
  }
};

}  // namespace detail

inline FormulaPtr from_sexpr(const std::string& s) {
  detail::SexprParser p(s);
  FormulaPtr f = p.parse();
  p.skip_ws();
  if (p.pos != s.size()) throw std::invalid_argument("s-expr: trailing input");
  return f;
}

// structural equality
inline bool formula_equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a->op != b->op || a->vars != b->vars || a->rel_name != b->rel_name ||
      a->colour != b->colour || a->kids.size() != b->kids.size())
    return false;
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (!formula_equal(a->kids[i], b->kids[i])) return false;
  return true;
}

inline std::size_t count_quantifiers(const FormulaPtr& f) {
  std::size_t n = (f->op == Formula::Op::Forall || f->op == Formula::Op::Exists) ? 1 : 0;
  for (auto& k : f->kids) n += count_quantifiers(k);
  return n;
}

inline bool is_quantifier_free(const FormulaPtr& f) { return count_quantifiers(f) == 0; }

// logically equivalent to an existential formula: built from literals with
// and/or/exists, negation only over quantifier-free parts
inline bool is_existential(const FormulaPtr& f) {
  switch (f->op) {
    case Formula::Op::True:
    case Formula::Op::False:
    case Formula::Op::Eq:
    case Formula::Op::Theta:
    case Formula::Op::Rel:
    case Formula::Op::Col:
      return true;
    case Formula::Op::Not:
    case Formula::Op::Iff:
      return is_quantifier_free(f);
    case Formula::Op::Implies:
      return is_quantifier_free(f->kids[0]) && is_existential(f->kids[1]);
    case Formula::Op::And:
    case Formula::Op::Or:
      for (auto& k : f->kids)
        if (!is_existential(k)) return false;
      return true;
    case Formula::Op::Exists:
      return is_existential(f->kids[0]);
    case Formula::Op::Forall:
      return false;
  }
  return false;
}

}  // namespace pregeomzol
