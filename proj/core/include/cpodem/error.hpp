#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cpodem {

enum class ErrorKind {
  OutOfBounds,
  InvalidArgument,
  DegenerateDesign,
  DimensionUnsupported,
  ZeroVariance,
  EmptyNode,
  NoSplit,
  GeometryMismatch,
  DegenerateRegion,
  EmptySource,
  ShapeMismatch,
  SolverFailure,
  IllConditioned,
  ZeroRange,
  NoInterface,
  OutOfDomain,
  CorpusError,
  ModelMissing,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (and tests) can branch on the category rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cpodem
