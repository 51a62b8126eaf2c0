#pragma once

#include <stdexcept>
#include <string>

namespace sgps {

/// Input outside the mathematical domain of an operation (e.g. a negative distance).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A configuration or specification object violates its invariants.
class InvalidSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arrays that should be aligned have incompatible sizes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or iteration failed numerically.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A design matrix lacks full column rank.
class SingularDesign : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Logistic MLE does not exist or was not reached.
class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Every cell of a field is missing.
class Unimputable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model was requested on data that cannot support it (e.g. oracle without h).
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. The message names file, line, and column.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, long line, const std::string& column,
             const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": column '" + column +
                           "': " + what),
        file_(file),
        line_(line),
        column_(column) {}

  const std::string& file() const { return file_; }
  long line() const { return line_; }
  const std::string& column() const { return column_; }

 private:
  std::string file_;
  long line_;
  std::string column_;
};

/// Well-formed input that fails a semantic check (e.g. non-binary treatment).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgps
