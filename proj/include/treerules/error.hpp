#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace treerules {

enum class ErrorKind {
  MissingFile,
  NonNumericFeature,
  NaNValue,
  NotBinary,
  EmptyDataset,
  TooFewInstances,
  FeatureOutOfRange,
  DimensionMismatch,
  SchemaError,
  NonPositiveEta,
  MissingClass,
  UnknownAtom,
  ZeroEverything,
  LengthMismatch,
  MissingMode,
  InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and tests)
// can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace treerules
