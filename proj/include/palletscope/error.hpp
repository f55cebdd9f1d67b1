#pragma once

#include <stdexcept>
#include <string>

namespace palletscope {

// Failure codes surfaced to callers and serialized into result records.
enum class ErrorCode {
  IdenticalLines,
  InfinitePoint,
  DegenerateCorrespondence,
  MapsToInfinity,
  DecodeError,
  ImageTooSmall,
  ConfigError,
  DimensionMismatch,
  NotEnoughEvidence,
  InsufficientSupport,
  OneSideNotVisible,
  NoEndpoints,
  SharedEdgeMismatch,
  DegenerateMask,
  NoPackagesOnFace,
  FrequencyInconclusive,
  LayerMismatch,
  ClassMismatch,
  SchemaError,
  DatasetMismatch,
  EmptyGroundTruth,
  SceneOutOfFrame,
  IoError,
};

// Stable snake_case name, also used as the per-unit status string in results.
const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace palletscope
