#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace freqsamp {

enum class ErrorKind {
  kNonPhysical,
  kInfeasibleGain,
  kSingularInitialTangent,
  kNoEquilibrium,
  kMissingTangents,
  kInfeasiblePerturbation,
  kEmptyGradientSet,
  kSchemaMismatch,
  kInvalidArgument,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. `kind()` is stable and machine-readable; the
/// message carries the human-facing detail (offending time, row, column...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace freqsamp
