#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mobjust {

/// Failure categories surfaced by the pipeline. The CLI prints the
/// category name in its error line so callers can branch on it.
enum class ErrorKind {
  EmptyInput,
  FileUnreadable,
  MissingHeader,
  MalformedWkt,
  DuplicateId,
  InvalidBlockGroup,
  ZeroPopulation,
  NoPings,
  InsufficientUnits,
  LengthMismatch,
  DegenerateVariance,
  EmptySample,
  InvalidConfig,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::FileUnreadable: return "FileUnreadable";
    case ErrorKind::MissingHeader: return "MissingHeader";
    case ErrorKind::MalformedWkt: return "MalformedWKT";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::InvalidBlockGroup: return "InvalidBlockGroup";
    case ErrorKind::ZeroPopulation: return "ZeroPopulation";
    case ErrorKind::NoPings: return "NoPings";
    case ErrorKind::InsufficientUnits: return "InsufficientUnits";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mobjust
