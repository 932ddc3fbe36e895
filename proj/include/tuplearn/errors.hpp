#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tuplearn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text input that does not follow a grammar. Line and column are 1-based;
// zero means "not applicable".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class SafetyError : public Error {
 public:
  using Error::Error;
};

class RecursionError : public Error {
 public:
  using Error::Error;
};

class UnknownRelationError : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

// Comparison between an integer and a string constant.
class TypeMismatchError : public Error {
 public:
  using Error::Error;
};

// A tuple whose probability is needed but unknown, or a reference to a tuple
// that does not exist.
class UnknownTupleError : public Error {
 public:
  using Error::Error;
};

class DanglingReferenceError : public Error {
 public:
  using Error::Error;
};

// Brute-force enumeration requested above the configured variable cutoff.
class OracleSizeError : public Error {
 public:
  using Error::Error;
};

// Neither decomposition, the Shannon budget, nor the enumeration cutoff
// suffices to compute a marginal.
class IntractableError : public Error {
 public:
  using Error::Error;
};

class ObjectiveInapplicableError : public Error {
 public:
  using Error::Error;
};

class InconsistencyError : public Error {
 public:
  using Error::Error;
};

class NoEvidenceError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace tuplearn
