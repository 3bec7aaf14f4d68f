#ifndef STOCHRELAX_ERRORS_HPP
#define STOCHRELAX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stochrelax {

//! @brief Failure categories raised by the library
enum class ErrorKind {
  DivisionByZeroInterval,
  OutOfRange,
  InvalidRelaxationPair,
  ParseError,
  DimensionError,
  EvalDomainError,
  CellOutsideSupport,
  ZeroProbabilityCell,
  InvalidArgument,
  StepFailure,
  NonFiniteState,
  BoundBlowup,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DivisionByZeroInterval: return "DivisionByZeroInterval";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::InvalidRelaxationPair: return "InvalidRelaxationPair";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::EvalDomainError: return "EvalDomainError";
    case ErrorKind::CellOutsideSupport: return "CellOutsideSupport";
    case ErrorKind::ZeroProbabilityCell: return "ZeroProbabilityCell";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::BoundBlowup: return "BoundBlowup";
  }
  return "Unknown";
}

//! @brief Exception carrying an ErrorKind alongside the message
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  //! True for failures of the numerics rather than of the input
  bool numeric() const noexcept {
    return kind_ == ErrorKind::StepFailure || kind_ == ErrorKind::NonFiniteState ||
           kind_ == ErrorKind::BoundBlowup || kind_ == ErrorKind::InvalidRelaxationPair ||
           kind_ == ErrorKind::EvalDomainError || kind_ == ErrorKind::DivisionByZeroInterval;
  }

 private:
  ErrorKind kind_;
};

//! Parse failure with 1-based source position
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(ErrorKind::ParseError,
              "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace stochrelax

#endif  // STOCHRELAX_ERRORS_HPP
