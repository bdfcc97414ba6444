#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace atelier {

enum class ErrorCode {
  // imaging
  ZeroDimension,
  AlphaModeViolation,
  OutOfBounds,
  LayoutMismatch,
  MalformedBuffer,
  // pairsynth
  PatchLargerThanImage,
  AllMasked,
  EmptyWeightMap,
  NotDivisibleByScale,
  JitterOutOfBounds,
  // stencil
  SpecOutOfBounds,
  EmptyAssetList,
  MissingAlphaChannel,
  UnreadableFile,
  UnknownZRole,
  UnknownLineWeight,
  // tiler
  InvalidGeometry,
  MissingTile,
  DimensionMismatch,
  TargetUnreachable,
  BudgetTooSmall,
  // refiner
  RefinerError,
  CapabilityExceeded,
  TransportError,
  ProtocolError,
  // dataset
  EmptyDataset,
  NoSingles,
  // shared
  IOError,
  ParseError,
  ValidationError,
  CodecError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI report) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace atelier
