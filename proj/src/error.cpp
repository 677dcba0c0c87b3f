#include "error.hpp"

namespace recidx {

ErrClass classify(Err code) {
  switch (code) {
    case Err::ConfigError:
      return ErrClass::Usage;
    case Err::DimensionMismatch:
    case Err::IndexOutOfRange:
    case Err::ShapeMismatch:
    case Err::EmptyUISet:
    case Err::InsufficientData:
    case Err::UnmatedProbePresent:
    case Err::InsufficientPairs:
    case Err::NoUnmatedProbes:
    case Err::CsvError:
    case Err::IoError:
      return ErrClass::Data;
    default:
      return ErrClass::Numeric;
  }
}

const char* err_name(Err code) {
  switch (code) {
    case Err::DegenerateVector: return "DegenerateVector";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::NonFiniteEvaluation: return "NonFiniteEvaluation";
    case Err::IndexOutOfRange: return "IndexOutOfRange";
    case Err::InvalidEpsilon: return "InvalidEpsilon";
    case Err::EmptyUISet: return "EmptyUISet";
    case Err::DegenerateCenter: return "DegenerateCenter";
    case Err::InsufficientVariance: return "InsufficientVariance";
    case Err::InsufficientData: return "InsufficientData";
    case Err::ZeroVariance: return "ZeroVariance";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::InfeasibleSeparation: return "InfeasibleSeparation";
    case Err::DivergenceDetected: return "DivergenceDetected";
    case Err::UnmatedProbePresent: return "UnmatedProbePresent";
    case Err::InsufficientPairs: return "InsufficientPairs";
    case Err::NoUnmatedProbes: return "NoUnmatedProbes";
    case Err::EmptyAfterRejection: return "EmptyAfterRejection";
    case Err::ConfigError: return "ConfigError";
    case Err::CsvError: return "CsvError";
    case Err::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace recidx
