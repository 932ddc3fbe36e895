#include "tuplearn/errors.hpp"

namespace tuplearn {

namespace {

std::string located(const std::string& what, std::size_t line, std::size_t column) {
  if (line == 0) return what;
  std::string out = what + " (line " + std::to_string(line);
  if (column) out += ", column " + std::to_string(column);
  return out + ")";
}

}  // namespace

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : Error(located(what, line, column)), line_(line), column_(column) {}

}  // namespace tuplearn
