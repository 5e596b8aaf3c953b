#include "freqsamp/error.hpp"

namespace freqsamp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNonPhysical: return "NonPhysical";
    case ErrorKind::kInfeasibleGain: return "InfeasibleGain";
    case ErrorKind::kSingularInitialTangent: return "SingularInitialTangent";
    case ErrorKind::kNoEquilibrium: return "NoEquilibrium";
    case ErrorKind::kMissingTangents: return "MissingTangents";
    case ErrorKind::kInfeasiblePerturbation: return "InfeasiblePerturbation";
    case ErrorKind::kEmptyGradientSet: return "EmptyGradientSet";
    case ErrorKind::kSchemaMismatch: return "SchemaMismatch";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace freqsamp
