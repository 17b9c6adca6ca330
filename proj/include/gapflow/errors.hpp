#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gapflow {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A pivot fell below the requested floor during LU factorization.
class SingularMatrix : public Error {
 public:
  SingularMatrix(const std::string& what, double pivot, std::ptrdiff_t column)
      : Error(what), pivot_(pivot), column_(column) {}

  double pivot() const noexcept { return pivot_; }
  std::ptrdiff_t column() const noexcept { return column_; }

 private:
  double pivot_;
  std::ptrdiff_t column_;
};

/// The KKT matrix could not be factorized during a flow step.
class SingularKkt : public SingularMatrix {
 public:
  using SingularMatrix::SingularMatrix;
};

class EvaluationFailure : public Error {
 public:
  using Error::Error;
};

class UnsupportedSet : public Error {
 public:
  using Error::Error;
};

class InitFailure : public Error {
 public:
  InitFailure(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Invalid user-supplied configuration (problem file, CLI flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

void require_same_size(std::ptrdiff_t expected, std::ptrdiff_t actual,
                       const char* what);

}  // namespace gapflow
