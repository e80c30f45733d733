#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kdpa {

enum class ErrorCode {
  // caller supplied something outside an operation's domain
  DomainError,
  ParseError,
  OutOfSupport,
  OutOfRange,
  Irregular,
  DegenerateCompetition,
  TooLarge,
  ThresholdOnAtom,
  // numerical machinery could not produce a trustworthy answer
  ZeroDensity,
  DegenerateConditioning,
  EmptyInterval,
  QuadratureFailure,
  NoBracket,
  NonMinimal,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::Irregular: return "Irregular";
    case ErrorCode::DegenerateCompetition: return "DegenerateCompetition";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ThresholdOnAtom: return "ThresholdOnAtom";
    case ErrorCode::ZeroDensity: return "ZeroDensity";
    case ErrorCode::DegenerateConditioning: return "DegenerateConditioning";
    case ErrorCode::EmptyInterval: return "EmptyInterval";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::NonMinimal: return "NonMinimal";
  }
  return "Unknown";
}

/// True for errors caused by bad inputs rather than numerical breakdown.
constexpr bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::DomainError:
    case ErrorCode::ParseError:
    case ErrorCode::OutOfSupport:
    case ErrorCode::OutOfRange:
    case ErrorCode::Irregular:
    case ErrorCode::DegenerateCompetition:
    case ErrorCode::TooLarge:
    case ErrorCode::ThresholdOnAtom:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

inline void require(bool condition, ErrorCode code, const char* message) {
  if (!condition) throw Error(code, message);
}

}  // namespace detail
}  // namespace kdpa
