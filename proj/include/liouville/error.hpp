#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace liouville {

enum class ErrorKind {
  Syntax,
  UnknownIdentifier,
  NonIntegerExponent,
  Domain,
  InconsistentSystem,
  NotStructurePreserving,
  StepFailure,
  DomainExit,
  NoReturnFound,
  DegenerateSeed,
  DimensionBound,
  PrimitiveMismatch,
  PathInconsistency,
  ModeMismatch,
  RankUnstable,
  HypothesisViolated,
  NotConformal,
  FieldTooSmall,
  NotInvertible,
  DegenerateQuadraticPart,
  UnresolvedMultiplicity,
  MissingBlock,
  Config,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code logic) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failures remember where in the source they happened.
class SyntaxError : public Error {
 public:
  SyntaxError(ErrorKind kind, std::size_t offset, const std::string& what)
      : Error(kind, what + " at byte " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace liouville
