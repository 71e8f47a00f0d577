#pragma once

#include <stdexcept>
#include <string>

namespace sitsrnn {

// Base of every exception thrown by the library. Messages are prefixed with
// the module that raised them ("lstm: ...", "data: ...").
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or dataset dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (CSV, manifest, model container).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Input violates a documented precondition (empty set, single class, NaN).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Iterative solver hit its safety cap without meeting the stopping rule.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string shape_str(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace detail

}  // namespace sitsrnn
