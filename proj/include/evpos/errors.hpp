#ifndef EVPOS_ERRORS_HPP
#define EVPOS_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evpos {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A caller-side precondition was not met (bad dimensions, f = 0 where f > 0 is required, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// A hypothesis of a checked statement failed on the sampled data.
/// The message names the hypothesis and carries the witness.
class PremiseViolation : public Error {
public:
  using Error::Error;
};

/// A conclusion that must follow from verified premises did not hold.
/// Seeing one of these means a bug or a genuine counterexample.
class ConsistencyViolation : public Error {
public:
  using Error::Error;
};

class TransferViolation : public ConsistencyViolation {
public:
  using ConsistencyViolation::ConsistencyViolation;
};

class OverflowError : public Error {
public:
  using Error::Error;
};

class EigenSolverFailure : public Error {
public:
  using Error::Error;
};

class DimensionTooLarge : public Error {
public:
  using Error::Error;
};

class SpectralBoundNotNegative : public Error {
public:
  using Error::Error;
};

class QuadratureBudgetExceeded : public Error {
public:
  using Error::Error;
};

class DepthExceeded : public Error {
public:
  using Error::Error;
};

class ShiftNotOnGrid : public Error {
public:
  using Error::Error;
};

class NotAnEigenpair : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class CertificateMissing : public Error {
public:
  using Error::Error;
};

class NoConvergence : public Error {
public:
  using Error::Error;
};

/// A witness search over sampled times came back empty; the statement is not refuted.
class WitnessSearchFailure : public Error {
public:
  using Error::Error;
};

/// The requested time series is not defined for this input.
class InapplicableQuantity : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

/// Malformed input document; line and column are 1-based, 0 when unknown.
class InputError : public Error {
public:
  InputError(const std::string &what, std::size_t line = 0, std::size_t column = 0)
      : Error(what), line_(line), column_(column)
  {
  }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

} // namespace evpos

#endif // EVPOS_ERRORS_HPP
