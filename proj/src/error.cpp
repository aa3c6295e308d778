#include "degradekit/error.hpp"

namespace degradekit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Format: return "format";
    case ErrorKind::Corruption: return "corruption";
    case ErrorKind::Io: return "io";
    case ErrorKind::Capability: return "capability";
    case ErrorKind::CalibrationAmbiguous: return "calibration-ambiguous";
    case ErrorKind::Orchestration: return "orchestration";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::Lattice: return "lattice";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Length: return "length";
    case ErrorKind::Rank: return "rank";
    case ErrorKind::Mismatch: return "mismatch";
    case ErrorKind::InsufficientSamples: return "insufficient-samples";
    case ErrorKind::Degeneracy: return "degeneracy";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::Format:
    case ErrorKind::Corruption:
    case ErrorKind::Length:
    case ErrorKind::Domain:
    case ErrorKind::Mismatch:
    case ErrorKind::Rank:
    case ErrorKind::Degeneracy:
      return 2;
    case ErrorKind::Capability:
      return 3;
    case ErrorKind::Budget:
    case ErrorKind::InsufficientSamples:
      return 4;
    default:
      return 1;
  }
}

}  // namespace degradekit
