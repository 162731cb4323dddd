#pragma once

#include <stdexcept>
#include <string>

namespace batdiff {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read, decoded or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Operand dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A parameter is outside its documented range.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered in a numeric state or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace batdiff
