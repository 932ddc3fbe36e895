#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tuplearn/database.hpp"
#include "tuplearn/formula.hpp"

namespace tuplearn {

// Rule text syntax, one rule per line:
//
//   Head(X, c) :- Body1(X, Y), !Body2(Y), X < Y, Y != "some text".
//
// Variables start with an upper-case letter or '_'. Constants are lower-case
// identifiers, integers, or double-quoted strings. Comparisons are
// = != < <= > >=. '%' starts a comment running to the end of the line.

struct Term {
  enum class Kind { Variable, Constant };
  Kind kind = Kind::Constant;
  std::string text;

  static Term variable(std::string name) { return {Kind::Variable, std::move(name)}; }
  static Term constant(std::string value) { return {Kind::Constant, std::move(value)}; }
  bool is_variable() const { return kind == Kind::Variable; }
  friend bool operator==(const Term&, const Term&) = default;
};

struct Atom {
  std::string relation;
  std::vector<Term> args;
  friend bool operator==(const Atom&, const Atom&) = default;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

struct Comparison {
  CompareOp op = CompareOp::Eq;
  Term lhs;
  Term rhs;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct DeductionRule {
  Atom head;
  std::vector<Atom> positive;
  std::vector<Atom> negative;
  std::vector<Comparison> arithmetic;
  std::size_t line = 0;

  friend bool operator==(const DeductionRule& a, const DeductionRule& b) {
    return a.head == b.head && a.positive == b.positive && a.negative == b.negative &&
           a.arithmetic == b.arithmetic;
  }
};

// Safe, non-recursive rule set. `strata` lists the intensional relations in
// an order where every relation comes after the ones its rules depend on.
struct DeductionProgram {
  std::vector<DeductionRule> rules;
  std::vector<std::string> strata;

  friend bool operator==(const DeductionProgram& a, const DeductionProgram& b) { return a.rules == b.rules; }
};

DeductionProgram parse_program(std::string_view text);

// Validates safety, arity consistency and non-recursion, and fills `strata`.
void validate(DeductionProgram& program);

std::string to_string(const DeductionRule& rule);
std::string to_string(const DeductionProgram& program);

struct DerivedTuple {
  TupleId tuple;
  Formula lineage;
};

// Bottom-up grounding. Derived tuples whose lineage folds to false are not
// reported; the result is sorted by relation and arguments.
std::vector<DerivedTuple> ground(const DeductionProgram& program, const ProbabilisticDatabase& db);

}  // namespace tuplearn
