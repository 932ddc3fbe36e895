#include "tuplearn/formula_io.hpp"

#include <cctype>
#include <charconv>

#include "tuplearn/database.hpp"
#include "tuplearn/errors.hpp"

namespace tuplearn {

bool is_bare_constant_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (std::isalnum(u)) return true;
  switch (c) {
    case '_': case '.': case '-': case '+': case ':': case '/': case '\'': case '@':
      return true;
    default:
      return false;
  }
}

std::string quote_constant(const std::string& value) {
  bool bare = !value.empty();
  for (char c : value) bare = bare && is_bare_constant_char(c);
  if (bare) return value;
  std::string out = "\"";
  for (char c : value) {
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

namespace {

void print(const Formula& f, const ProbabilisticDatabase* db, std::string& out);

void print_child(const Formula& f, const ProbabilisticDatabase* db, std::string& out) {
  const bool wrap = f.kind() == NodeKind::And || f.kind() == NodeKind::Or;
  if (wrap) out += '(';
  print(f, db, out);
  if (wrap) out += ')';
}

void print(const Formula& f, const ProbabilisticDatabase* db, std::string& out) {
  switch (f.kind()) {
    case NodeKind::False:
      out += "false";
      return;
    case NodeKind::True:
      out += "true";
      return;
    case NodeKind::Var:
      if (db) {
        out += tuple_text(db->tuple(f.var_id()));
      } else {
        out += '#';
        out += std::to_string(f.var_id());
      }
      return;
    case NodeKind::Not:
      out += '!';
      print_child(f.children().front(), db, out);
      return;
    case NodeKind::And:
    case NodeKind::Or: {
      const char* sep = f.kind() == NodeKind::And ? " & " : " | ";
      bool first = true;
      for (const Formula& c : f.children()) {
        if (!first) out += sep;
        first = false;
        print_child(c, db, out);
      }
      return;
    }
  }
}

class Parser {
 public:
  Parser(std::string_view text, const ProbabilisticDatabase* db) : text_(text), db_(db) {}

  Formula parse() {
    Formula f = disj();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

  TupleId tuple_id() {
    TupleId id = arguments(identifier());
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return id;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("formula: " + what, 1, pos_ + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Formula disj() {
    std::vector<Formula> parts{conj()};
    while (accept('|')) parts.push_back(conj());
    return parts.size() == 1 ? parts.front() : Formula::disjunction(std::move(parts));
  }

  Formula conj() {
    std::vector<Formula> parts{unary()};
    while (accept('&')) parts.push_back(unary());
    return parts.size() == 1 ? parts.front() : Formula::conjunction(std::move(parts));
  }

  Formula unary() {
    skip_ws();
    if (accept('!')) return Formula::negation(unary());
    if (accept('(')) {
      Formula f = disj();
      expect(')');
      return f;
    }
    if (accept('#')) return raw_tuple();
    return named();
  }

  Formula raw_tuple() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    VarId id = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, id);
    if (start == pos_ || ec != std::errc()) fail("expected tuple index after '#'");
    if (db_ && id >= db_->size()) {
      throw DanglingReferenceError("tuple #" + std::to_string(id) + " does not exist");
    }
    return Formula::var(id);
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '\'')) {
        ++pos_;
      }
    }
    if (start == pos_) fail("expected relation name, 'true', 'false' or '#'");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string constant() {
    skip_ws();
    if (pos_ >= text_.size()) fail("expected constant");
    if (text_[pos_] == '"') {
      ++pos_;
      std::string out;
      while (true) {
        if (pos_ >= text_.size()) fail("unterminated string");
        char c = text_[pos_++];
        if (c == '"') break;
        if (c == '\\') {
          if (pos_ >= text_.size()) fail("unterminated escape");
          char e = text_[pos_++];
          out += e == 't' ? '\t' : e == 'n' ? '\n' : e;
        } else {
          out += c;
        }
      }
      return out;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_bare_constant_char(text_[pos_])) ++pos_;
    if (start == pos_) fail("expected constant");
    return std::string(text_.substr(start, pos_ - start));
  }

  TupleId arguments(std::string name) {
    expect('(');
    TupleId id{std::move(name), {}};
    if (!accept(')')) {
      do {
        id.args.push_back(constant());
      } while (accept(','));
      expect(')');
    }
    return id;
  }

  Formula named() {
    std::string name = identifier();
    if (name == "true") return Formula::constant(true);
    if (name == "false") return Formula::constant(false);
    TupleId id = arguments(std::move(name));
    if (!db_) fail("tuple reference " + tuple_text(id) + " needs a database");
    auto v = db_->find(id);
    if (!v) throw DanglingReferenceError("tuple " + tuple_text(id) + " does not exist");
    return Formula::var(*v);
  }

  std::string_view text_;
  const ProbabilisticDatabase* db_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(const Formula& f, const ProbabilisticDatabase* db) {
  std::string out;
  print(f, db, out);
  return out;
}

Formula parse_formula(std::string_view text, const ProbabilisticDatabase* db) {
  return Parser(text, db).parse();
}

TupleId parse_tuple_id(std::string_view text) { return Parser(text, nullptr).tuple_id(); }

}  // namespace tuplearn
