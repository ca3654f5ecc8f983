#pragma once

#include <stdexcept>
#include <string>

namespace kmland {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mixture model violates one of its construction invariants.
class InvalidModel : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Two fitted centers coincide where distinct centers are required.
class DegenerateSolution : public Error {
 public:
  DegenerateSolution(std::size_t i, std::size_t j)
      : Error("degenerate solution: centers " + std::to_string(i + 1) + " and " +
              std::to_string(j + 1) + " coincide"),
        first(i),
        second(j) {}
  std::size_t first;
  std::size_t second;
};

class EmptyCell : public Error {
 public:
  explicit EmptyCell(std::size_t i)
      : Error("empty cell: center " + std::to_string(i + 1) + " has no assigned mass"), index(i) {}
  std::size_t index;
};

/// The requested estimator cannot handle the given model.
class Capability : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class Precondition : public Error {
 public:
  using Error::Error;
};

/// Piecewise closed forms do not apply (a boundary sits on a ball edge).
class Validity : public Error {
 public:
  using Error::Error;
};

}  // namespace kmland
