#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace delayflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed topology or problem input. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// The average-delay counterpart (or the exact model) admits no feasible flow.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace delayflow
