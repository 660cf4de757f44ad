#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace toolmotion {

enum class ErrorKind {
  // input / schema
  ParseError,
  SchemaError,
  OrderError,
  AnnotationError,
  BadWindow,
  BadBasis,
  BadProfile,
  CoverageError,
  // empty-result contracts
  TooFewStrokes,
  AllExcluded,
  InsufficientFolds,
  SingleClass,
  EmptyClass,
  EmptyMatrix,
  InsufficientData,
  // numeric
  DegenerateInput,
  DegenerateMotion,
  ZeroChord,
  NumericFailure,
};

std::string_view error_name(ErrorKind kind) noexcept;

/// Process exit code for an error kind: 2 input/schema, 3 empty result, 4 numeric.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view error_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::OrderError: return "OrderError";
    case ErrorKind::AnnotationError: return "AnnotationError";
    case ErrorKind::BadWindow: return "BadWindow";
    case ErrorKind::BadBasis: return "BadBasis";
    case ErrorKind::BadProfile: return "BadProfile";
    case ErrorKind::CoverageError: return "CoverageError";
    case ErrorKind::TooFewStrokes: return "TooFewStrokes";
    case ErrorKind::AllExcluded: return "AllExcluded";
    case ErrorKind::InsufficientFolds: return "InsufficientFolds";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::DegenerateMotion: return "DegenerateMotion";
    case ErrorKind::ZeroChord: return "ZeroChord";
    case ErrorKind::NumericFailure: return "NumericFailure";
  }
  return "Error";
}

inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::SchemaError:
    case ErrorKind::OrderError:
    case ErrorKind::AnnotationError:
    case ErrorKind::BadWindow:
    case ErrorKind::BadBasis:
    case ErrorKind::BadProfile:
    case ErrorKind::CoverageError:
    case ErrorKind::InsufficientFolds:
    case ErrorKind::SingleClass:
    case ErrorKind::EmptyClass:
      return 2;
    case ErrorKind::TooFewStrokes:
    case ErrorKind::AllExcluded:
    case ErrorKind::EmptyMatrix:
    case ErrorKind::InsufficientData:
      return 3;
    case ErrorKind::DegenerateInput:
    case ErrorKind::DegenerateMotion:
    case ErrorKind::ZeroChord:
    case ErrorKind::NumericFailure:
      return 4;
  }
  return 4;
}

}  // namespace toolmotion
