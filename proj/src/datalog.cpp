#include "tuplearn/datalog.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <variant>

#include "tuplearn/errors.hpp"
#include "tuplearn/formula_io.hpp"

namespace tuplearn {

namespace {

// ---------------------------------------------------------------- lexing

enum class Tok { Ident, Number, String, LParen, RParen, Comma, Dot, Implies, Bang, Cmp, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip();
      if (pos_ >= text_.size()) {
        out.push_back({Tok::End, "", line_, col()});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  std::size_t col() const { return pos_ - line_start_ + 1; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError("rules: " + what, line_, col()); }

  void skip() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        ++pos_;
        ++line_;
        line_start_ = pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        return;
      }
    }
  }

  Token next() {
    const std::size_t line = line_, column = col();
    auto make = [&](Tok k, std::string s) { return Token{k, std::move(s), line, column}; };
    const char c = text_[pos_];
    auto peek = [&](std::size_t off) { return pos_ + off < text_.size() ? text_[pos_ + off] : '\0'; };

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '\'')) {
        ++pos_;
      }
      return make(Tok::Ident, std::string(text_.substr(start, pos_ - start)));
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      const std::size_t start = pos_++;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return make(Tok::Number, std::string(text_.substr(start, pos_ - start)));
    }
    if (c == '"') {
      ++pos_;
      std::string s;
      while (true) {
        if (pos_ >= text_.size() || text_[pos_] == '\n') fail("unterminated string");
        char d = text_[pos_++];
        if (d == '"') break;
        if (d == '\\') {
          if (pos_ >= text_.size()) fail("unterminated escape");
          char e = text_[pos_++];
          s += e == 't' ? '\t' : e == 'n' ? '\n' : e;
        } else {
          s += d;
        }
      }
      return make(Tok::String, std::move(s));
    }
    ++pos_;
    switch (c) {
      case '(': return make(Tok::LParen, "(");
      case ')': return make(Tok::RParen, ")");
      case ',': return make(Tok::Comma, ",");
      case '.': return make(Tok::Dot, ".");
      case ':':
        if (peek(0) == '-') {
          ++pos_;
          return make(Tok::Implies, ":-");
        }
        break;
      case '!':
        if (peek(0) == '=') {
          ++pos_;
          return make(Tok::Cmp, "!=");
        }
        return make(Tok::Bang, "!");
      case '=':
        return make(Tok::Cmp, "=");
      case '<':
      case '>':
        if (peek(0) == '=') {
          ++pos_;
          return make(Tok::Cmp, std::string(1, c) + "=");
        }
        return make(Tok::Cmp, std::string(1, c));
      default:
        break;
    }
    --pos_;
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_start_ = 0;
};

// ---------------------------------------------------------------- parsing

bool is_variable_name(const std::string& s) {
  return !s.empty() && (std::isupper(static_cast<unsigned char>(s[0])) || s[0] == '_');
}

class RuleParser {
 public:
  explicit RuleParser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  DeductionProgram parse() {
    DeductionProgram prog;
    while (peek().kind != Tok::End) prog.rules.push_back(rule());
    return prog;
  }

 private:
  const Token& peek(std::size_t off = 0) const { return toks_[std::min(pos_ + off, toks_.size() - 1)]; }
  const Token& take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& what, const Token& at) const {
    throw ParseError("rules: " + what, at.line, at.column);
  }

  const Token& expect(Tok k, const char* what) {
    if (peek().kind != k) fail(std::string("expected ") + what, peek());
    return take();
  }

  Term term() {
    const Token& t = take();
    switch (t.kind) {
      case Tok::Ident:
        return is_variable_name(t.text) ? Term::variable(t.text) : Term::constant(t.text);
      case Tok::Number:
      case Tok::String:
        return Term::constant(t.text);
      default:
        fail("expected variable or constant", t);
    }
  }

  Atom atom() {
    Atom a;
    a.relation = expect(Tok::Ident, "relation name").text;
    expect(Tok::LParen, "'('");
    if (peek().kind != Tok::RParen) {
      a.args.push_back(term());
      while (peek().kind == Tok::Comma) {
        take();
        a.args.push_back(term());
      }
    }
    expect(Tok::RParen, "')'");
    return a;
  }

  static CompareOp op_of(const std::string& s) {
    if (s == "=") return CompareOp::Eq;
    if (s == "!=") return CompareOp::Ne;
    if (s == "<") return CompareOp::Lt;
    if (s == "<=") return CompareOp::Le;
    if (s == ">") return CompareOp::Gt;
    return CompareOp::Ge;
  }

  DeductionRule rule() {
    DeductionRule r;
    r.line = peek().line;
    r.head = atom();
    expect(Tok::Implies, "':-'");
    do {
      if (peek().kind == Tok::Bang) {
        take();
        r.negative.push_back(atom());
      } else if (peek().kind == Tok::Ident && peek(1).kind == Tok::LParen) {
        r.positive.push_back(atom());
      } else {
        Comparison c;
        c.lhs = term();
        const Token& op = expect(Tok::Cmp, "comparison operator");
        c.op = op_of(op.text);
        c.rhs = term();
        r.arithmetic.push_back(std::move(c));
      }
      if (peek().kind != Tok::Comma) break;
      take();
    } while (true);
    expect(Tok::Dot, "'.' at end of rule");
    return r;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

void collect_vars(const std::vector<Term>& terms, std::set<std::string>& out) {
  for (const Term& t : terms) {
    if (t.is_variable()) out.insert(t.text);
  }
}

std::string at_line(const DeductionRule& r) {
  return r.line ? " (line " + std::to_string(r.line) + ")" : "";
}

}  // namespace

void validate(DeductionProgram& program) {
  std::map<std::string, std::size_t> arity;
  auto check_arity = [&](const Atom& a, const DeductionRule& r) {
    auto [it, inserted] = arity.emplace(a.relation, a.args.size());
    if (!inserted && it->second != a.args.size()) {
      throw ArityError("relation " + a.relation + " used with arity " + std::to_string(a.args.size()) + " and " +
                       std::to_string(it->second) + at_line(r));
    }
  };

  std::vector<std::string> heads;
  for (const DeductionRule& r : program.rules) {
    if (r.positive.empty()) {
      throw SafetyError("rule for " + r.head.relation + " needs at least one positive literal" + at_line(r));
    }
    std::set<std::string> bound;
    for (const Atom& a : r.positive) collect_vars(a.args, bound);
    std::set<std::string> needed;
    collect_vars(r.head.args, needed);
    for (const Atom& a : r.negative) collect_vars(a.args, needed);
    for (const Comparison& c : r.arithmetic) collect_vars({c.lhs, c.rhs}, needed);
    for (const std::string& v : needed) {
      if (!bound.count(v)) {
        throw SafetyError("variable " + v + " in rule for " + r.head.relation +
                          " is not bound by a positive literal" + at_line(r));
      }
    }
    check_arity(r.head, r);
    for (const Atom& a : r.positive) check_arity(a, r);
    for (const Atom& a : r.negative) check_arity(a, r);
    if (std::find(heads.begin(), heads.end(), r.head.relation) == heads.end()) heads.push_back(r.head.relation);
  }

  std::map<std::string, std::vector<std::string>> deps;
  const std::set<std::string> intensional(heads.begin(), heads.end());
  for (const DeductionRule& r : program.rules) {
    auto& d = deps[r.head.relation];
    auto add = [&](const Atom& a) {
      if (intensional.count(a.relation) && std::find(d.begin(), d.end(), a.relation) == d.end()) {
        d.push_back(a.relation);
      }
    };
    for (const Atom& a : r.positive) add(a);
    for (const Atom& a : r.negative) add(a);
  }

  enum class Mark { None, Active, Done };
  std::map<std::string, Mark> mark;
  std::vector<std::string> stack;
  std::vector<std::string> order;
  std::function<void(const std::string&)> visit = [&](const std::string& rel) {
    Mark& m = mark[rel];
    if (m == Mark::Done) return;
    if (m == Mark::Active) {
      auto it = std::find(stack.begin(), stack.end(), rel);
      std::string cycle;
      for (; it != stack.end(); ++it) cycle += *it + " -> ";
      throw RecursionError("recursive rules: " + cycle + rel);
    }
    m = Mark::Active;
    stack.push_back(rel);
    for (const std::string& d : deps[rel]) visit(d);
    stack.pop_back();
    mark[rel] = Mark::Done;
    order.push_back(rel);
  };
  for (const std::string& h : heads) visit(h);
  program.strata = std::move(order);
}

DeductionProgram parse_program(std::string_view text) {
  DeductionProgram prog = RuleParser(Lexer(text).run()).parse();
  validate(prog);
  return prog;
}

namespace {

bool is_rule_identifier(const std::string& s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
  });
}

bool is_integer(const std::string& s, long long* out = nullptr) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return false;
  if (out) *out = v;
  return true;
}

std::string term_text(const Term& t) {
  if (t.is_variable() || is_rule_identifier(t.text) || is_integer(t.text)) return t.text;
  std::string out = "\"";
  for (char c : t.text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string atom_text(const Atom& a) {
  std::string out = a.relation + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ", ";
    out += term_text(a.args[i]);
  }
  return out + ")";
}

const char* op_text(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
  }
  return "=";
}

}  // namespace

std::string to_string(const DeductionRule& rule) {
  std::string out = atom_text(rule.head) + " :- ";
  std::vector<std::string> items;
  for (const Atom& a : rule.positive) items.push_back(atom_text(a));
  for (const Atom& a : rule.negative) items.push_back("!" + atom_text(a));
  for (const Comparison& c : rule.arithmetic) {
    items.push_back(term_text(c.lhs) + " " + op_text(c.op) + " " + term_text(c.rhs));
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out + ".";
}

std::string to_string(const DeductionProgram& program) {
  std::string out;
  for (const DeductionRule& r : program.rules) out += to_string(r) + "\n";
  return out;
}

// ---------------------------------------------------------------- grounding

namespace {

using Row = std::vector<std::string>;

struct RowHash {
  std::size_t operator()(const Row& r) const {
    std::size_t h = r.size();
    for (const std::string& s : r) h ^= std::hash<std::string>{}(s) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

struct Table {
  std::size_t arity = 0;
  std::vector<Row> rows;
  std::vector<Formula> lineage;
  std::unordered_map<Row, std::size_t, RowHash> index;

  const Formula* find(const Row& r) const {
    auto it = index.find(r);
    return it == index.end() ? nullptr : &lineage[it->second];
  }

  void merge(Row r, const Formula& f) {
    auto it = index.find(r);
    if (it == index.end()) {
      index.emplace(r, rows.size());
      rows.push_back(std::move(r));
      lineage.push_back(f);
    } else {
      lineage[it->second] = Formula::disjunction({lineage[it->second], f});
    }
  }
};

// Compares two constants: integers numerically, strings lexicographically.
bool compare_values(const std::string& a, const std::string& b, CompareOp op) {
  long long x = 0, y = 0;
  const bool ia = is_integer(a, &x), ib = is_integer(b, &y);
  if (ia != ib) {
    throw TypeMismatchError("cannot compare integer and string constants: " + a + " and " + b);
  }
  int c = ia ? (x < y ? -1 : x > y ? 1 : 0) : a.compare(b);
  switch (op) {
    case CompareOp::Eq: return c == 0;
    case CompareOp::Ne: return c != 0;
    case CompareOp::Lt: return c < 0;
    case CompareOp::Le: return c <= 0;
    case CompareOp::Gt: return c > 0;
    case CompareOp::Ge: return c >= 0;
  }
  return false;
}

class RuleGrounder {
 public:
  RuleGrounder(const DeductionRule& rule, const std::map<std::string, Table>& tables, Table& out)
      : rule_(rule), tables_(tables), out_(out) {
    for (const Atom& a : rule.positive) resolve(a);
    for (const Atom& a : rule.negative) resolve(a);
    plan();
  }

  void run() { step(0); }

 private:
  struct Literal {
    const Atom* atom;
    const Table* table;
    std::vector<std::size_t> key_positions;
    std::unordered_map<Row, std::vector<std::size_t>, RowHash> index;
  };

  const Table& resolve(const Atom& a) {
    auto it = tables_.find(a.relation);
    if (it == tables_.end()) throw UnknownRelationError("unknown relation " + a.relation + at_line(rule_));
    if (it->second.arity != a.args.size()) {
      throw ArityError("relation " + a.relation + " has arity " + std::to_string(it->second.arity) + ", used with " +
                       std::to_string(a.args.size()) + at_line(rule_));
    }
    return it->second;
  }

  std::size_t slot(const std::string& var) {
    auto [it, inserted] = slots_.emplace(var, slots_.size());
    if (inserted) binding_.push_back(nullptr);
    return it->second;
  }

  // Greedy join order: next literal is the one with the most bound columns.
  void plan() {
    std::set<std::string> bound;
    std::vector<bool> used(rule_.positive.size(), false);
    for (std::size_t n = 0; n < rule_.positive.size(); ++n) {
      std::size_t best = 0;
      int best_score = -1;
      for (std::size_t i = 0; i < rule_.positive.size(); ++i) {
        if (used[i]) continue;
        int score = 0;
        for (const Term& t : rule_.positive[i].args) score += !t.is_variable() || bound.count(t.text);
        if (score > best_score) {
          best = i;
          best_score = score;
        }
      }
      used[best] = true;
      const Atom& a = rule_.positive[best];
      Literal lit{&a, &resolve(a), {}, {}};
      std::set<std::string> seen_here;
      for (std::size_t k = 0; k < a.args.size(); ++k) {
        const Term& t = a.args[k];
        if (!t.is_variable() || bound.count(t.text)) lit.key_positions.push_back(k);
      }
      for (const Row& r : std::as_const(lit.table->rows)) {
        Row key;
        for (std::size_t k : lit.key_positions) key.push_back(r[k]);
        lit.index[key].push_back(&r - lit.table->rows.data());
      }
      for (const Term& t : a.args) {
        if (t.is_variable()) {
          slot(t.text);
          bound.insert(t.text);
        }
      }
      order_.push_back(std::move(lit));
    }
    for (const Atom& a : rule_.negative) {
      for (const Term& t : a.args) {
        if (t.is_variable()) slot(t.text);
      }
    }
    for (const Comparison& c : rule_.arithmetic) {
      if (c.lhs.is_variable()) slot(c.lhs.text);
      if (c.rhs.is_variable()) slot(c.rhs.text);
    }
    for (const Term& t : rule_.head.args) {
      if (t.is_variable()) slot(t.text);
    }
  }

  const std::string& value(const Term& t) { return t.is_variable() ? *binding_[slots_.at(t.text)] : t.text; }

  Row ground_args(const Atom& a) {
    Row r;
    r.reserve(a.args.size());
    for (const Term& t : a.args) r.push_back(value(t));
    return r;
  }

  void step(std::size_t depth) {
    if (depth == order_.size()) {
      finish();
      return;
    }
    Literal& lit = order_[depth];
    Row key;
    for (std::size_t k : lit.key_positions) key.push_back(value(lit.atom->args[k]));
    auto it = lit.index.find(key);
    if (it == lit.index.end()) return;

    for (std::size_t row_idx : it->second) {
      const Row& row = lit.table->rows[row_idx];
      std::vector<std::size_t> newly;
      bool ok = true;
      for (std::size_t k = 0; k < row.size() && ok; ++k) {
        const Term& t = lit.atom->args[k];
        if (!t.is_variable()) continue;
        const std::size_t s = slots_.at(t.text);
        if (binding_[s] == nullptr) {
          binding_[s] = &row[k];
          newly.push_back(s);
        } else {
          ok = *binding_[s] == row[k];
        }
      }
      if (ok) {
        parts_.push_back(lit.table->lineage[row_idx]);
        step(depth + 1);
        parts_.pop_back();
      }
      for (std::size_t s : newly) binding_[s] = nullptr;
    }
  }

  void finish() {
    for (const Comparison& c : rule_.arithmetic) {
      if (!compare_values(value(c.lhs), value(c.rhs), c.op)) return;
    }
    std::vector<Formula> body = parts_;
    for (const Atom& a : rule_.negative) {
      const Table& t = tables_.at(a.relation);
      if (const Formula* f = t.find(ground_args(a))) body.push_back(Formula::negation(*f));
    }
    Formula lineage = Formula::conjunction(std::move(body));
    if (lineage.is_false()) return;
    out_.merge(ground_args(rule_.head), lineage);
  }

  const DeductionRule& rule_;
  const std::map<std::string, Table>& tables_;
  Table& out_;
  std::vector<Literal> order_;
  std::unordered_map<std::string, std::size_t> slots_;
  std::vector<const std::string*> binding_;
  std::vector<Formula> parts_;
};

}  // namespace

std::vector<DerivedTuple> ground(const DeductionProgram& program, const ProbabilisticDatabase& db) {
  std::map<std::string, Table> tables;
  for (const auto& [name, rel] : db.relations()) {
    Table& t = tables[name];
    t.arity = rel.arity;
    for (VarId v : rel.tuples) t.merge(db.tuple(v).args, Formula::var(v));
  }

  std::map<std::string, std::size_t> head_arity;
  for (const DeductionRule& r : program.rules) head_arity.emplace(r.head.relation, r.head.args.size());
  for (const auto& [name, arity] : head_arity) {
    if (tables.count(name)) {
      throw InvalidArgumentError("relation " + name + " is both extensional and derived by rules");
    }
  }

  std::vector<std::string> strata = program.strata;
  if (strata.empty() && !program.rules.empty()) {
    DeductionProgram copy = program;
    validate(copy);
    strata = copy.strata;
  }

  std::vector<std::string> derived;
  for (const std::string& rel : strata) {
    Table fresh;
    fresh.arity = head_arity.at(rel);
    for (const DeductionRule& r : program.rules) {
      if (r.head.relation == rel) RuleGrounder(r, tables, fresh).run();
    }
    tables.emplace(rel, std::move(fresh));
    derived.push_back(rel);
  }

  std::vector<DerivedTuple> out;
  for (const std::string& rel : derived) {
    const Table& t = tables.at(rel);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      if (!t.lineage[i].is_false()) out.push_back({TupleId{rel, t.rows[i]}, t.lineage[i]});
    }
  }
  std::sort(out.begin(), out.end(), [](const DerivedTuple& a, const DerivedTuple& b) { return a.tuple < b.tuple; });
  return out;
}

}  // namespace tuplearn
