#include "evflow/error.hpp"

namespace evflow {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedRecord: return "TruncatedRecord";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::NonMonotonic: return "NonMonotonic";
    case Errc::InvalidPolarity: return "InvalidPolarity";
    case Errc::InvalidInterval: return "InvalidInterval";
    case Errc::DegenerateTrajectory: return "DegenerateTrajectory";
    case Errc::InvalidWindow: return "InvalidWindow";
    case Errc::UpscaleUnsupported: return "UpscaleUnsupported";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::InsufficientOverlap: return "InsufficientOverlap";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::BehindCamera: return "BehindCamera";
    case Errc::OffSensor: return "OffSensor";
    case Errc::MissingField: return "MissingField";
    case Errc::NonOrthonormalRotation: return "NonOrthonormalRotation";
    case Errc::NoGroundTruth: return "NoGroundTruth";
    case Errc::NonUniformSampling: return "NonUniformSampling";
    case Errc::NegativeVoltage: return "NegativeVoltage";
    case Errc::EmptyTrace: return "EmptyTrace";
    case Errc::TraceTooShort: return "TraceTooShort";
    case Errc::WindowOutOfRange: return "WindowOutOfRange";
    case Errc::ZeroFrames: return "ZeroFrames";
    case Errc::MissingInput: return "MissingInput";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(message) {}

void raise(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace evflow
