#pragma once

#include <string>
#include <string_view>

#include "tuplearn/formula.hpp"

namespace tuplearn {

class ProbabilisticDatabase;
struct TupleId;

// Lineage text syntax
//
//   formula := disj
//   disj    := conj { '|' conj }
//   conj    := unary { '&' unary }
//   unary   := '!' unary | '(' disj ')' | 'true' | 'false' | tuple
//   tuple   := '#' digits                      raw tuple index
//            | relation '(' [ const { ',' const } ] ')'
//   const   := bare | '"' escaped '"'
//
// Bare constants use letters, digits and `_ . - + : / ' @`; anything else is
// double-quoted with backslash escapes. Whitespace is insignificant.

// Without a database, tuples print as `#<index>` and only `#<index>` parses.
std::string to_string(const Formula& f, const ProbabilisticDatabase* db = nullptr);
Formula parse_formula(std::string_view text, const ProbabilisticDatabase* db = nullptr);

// A single `relation(args)` reference, without a database lookup.
TupleId parse_tuple_id(std::string_view text);

std::string quote_constant(const std::string& value);
bool is_bare_constant_char(char c);

}  // namespace tuplearn
