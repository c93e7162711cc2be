#include "treerules/error.hpp"

namespace treerules {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::NonNumericFeature: return "NonNumericFeature";
    case ErrorKind::NaNValue: return "NaNValue";
    case ErrorKind::NotBinary: return "NotBinary";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::TooFewInstances: return "TooFewInstances";
    case ErrorKind::FeatureOutOfRange: return "FeatureOutOfRange";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::NonPositiveEta: return "NonPositiveEta";
    case ErrorKind::MissingClass: return "MissingClass";
    case ErrorKind::UnknownAtom: return "UnknownAtom";
    case ErrorKind::ZeroEverything: return "ZeroEverything";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::MissingMode: return "MissingMode";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace treerules
