#pragma once

#include <stdexcept>
#include <string>

namespace degradekit {

enum class ErrorKind {
  Validation,
  Format,
  Corruption,
  Io,
  Capability,
  CalibrationAmbiguous,
  Orchestration,
  Budget,
  Lattice,
  Domain,
  Length,
  Rank,
  Mismatch,
  InsufficientSamples,
  Degeneracy,
};

const char* to_string(ErrorKind kind);

// CLI exit code for an error kind: 2 validation, 3 capability, 4 budget/partial, 1 otherwise.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace degradekit
