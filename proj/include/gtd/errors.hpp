#pragma once

#include <stdexcept>
#include <string>

namespace gtd {

// Point outside the real domain of an expression (ln of non-positive
// argument, division by zero, singular power base).
class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Domain violation raised while evaluating an expression tree; carries the
// canonical print of the offending subterm in the message.
class EvalError : public DomainError {
public:
  using DomainError::DomainError;
};

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& msg, int line, int col)
      : std::runtime_error(msg + " at " + std::to_string(line) + ":" + std::to_string(col)),
        line(line),
        col(col) {}
  int line;
  int col;
};

class DegenerateMetricError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad run configuration (CLI flags, config files, system definition files).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace gtd
