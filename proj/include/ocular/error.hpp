#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ocular {

enum class ErrorKind {
  DegenerateInput,
  OpenMesh,
  EmptyGrid,
  DimensionMismatch,
  EmptyIntersection,
  OutOfRange,
  OrderViolation,
  NoObject,
  MultipleObjects,
  ScaleDivergence,
  EmptyInput,
  EmptyRun,
  IoFailure,
  MemoryCap,
  OverlapDetected,
  InconsistentSliceDims,
  InvalidManifest,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind so the
/// CLI can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ocular
