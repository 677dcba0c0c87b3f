#pragma once

#include <stdexcept>
#include <string>

namespace recidx {

enum class Err {
  DegenerateVector,
  DimensionMismatch,
  NonFiniteEvaluation,
  IndexOutOfRange,
  InvalidEpsilon,
  EmptyUISet,
  DegenerateCenter,
  InsufficientVariance,
  InsufficientData,
  ZeroVariance,
  ShapeMismatch,
  InfeasibleSeparation,
  DivergenceDetected,
  UnmatedProbePresent,
  InsufficientPairs,
  NoUnmatedProbes,
  EmptyAfterRejection,
  ConfigError,
  CsvError,
  IoError,
};

// Coarse category, aligned with process exit codes: 2 usage, 3 data, 4 numeric.
enum class ErrClass { Usage = 2, Data = 3, Numeric = 4 };

ErrClass classify(Err code);
const char* err_name(Err code);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}

  Err code() const { return code_; }
  ErrClass cls() const { return classify(code_); }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

}  // namespace recidx
