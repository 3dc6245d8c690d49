#pragma once

#include <stdexcept>
#include <string>

namespace cobalt {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input that parses but violates a documented invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

/// File content that cannot be parsed at all.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

/// Numerical failure inside a linear solve (mechanism, singular system).
class SolveError : public Error {
 public:
  explicit SolveError(const std::string& what) : Error(what) {}
};

}  // namespace cobalt
