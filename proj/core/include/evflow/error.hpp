#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evflow {

// Every failure raised by the library carries one of these codes. The CLI
// prints the code name verbatim so callers can parse it.
enum class Errc {
  // event_core
  BadMagic,
  TruncatedRecord,
  OutOfBounds,
  NonMonotonic,
  InvalidPolarity,
  InvalidInterval,
  // synthgen
  DegenerateTrajectory,
  // accumulator
  InvalidWindow,
  UpscaleUnsupported,
  // sync
  ZeroVariance,
  ShapeMismatch,
  InsufficientOverlap,
  // geometry
  NoConvergence,
  BehindCamera,
  OffSensor,
  MissingField,
  NonOrthonormalRotation,
  // labels_eval
  NoGroundTruth,
  // power_bench
  NonUniformSampling,
  NegativeVoltage,
  EmptyTrace,
  TraceTooShort,
  WindowOutOfRange,
  ZeroFrames,
  MissingInput,
  // pipeline / shared
  ConfigInvalid,
  InvalidArgument,
  ParseError,
  IoError,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] void raise(Errc code, const std::string& message);

}  // namespace evflow
