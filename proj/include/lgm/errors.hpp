#pragma once

#include <stdexcept>
#include <string>

namespace lgm {

// Process exit codes used by the CLI. Library code communicates through the
// exception types below; each type carries the code its category maps to.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitParse = 2,
  kExitDegenerate = 3,
  kExitNumeric = 4,
  kExitManifest = 5,
};

class Error : public std::runtime_error {
public:
  Error(const std::string& msg, int exit_code)
      : std::runtime_error(msg), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

private:
  int exit_code_;
};

// Malformed or inconsistent input content.
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error(m, kExitParse) {}
};
struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& m) : Error(m, kExitParse) {}
};
struct NonFiniteSample : Error {
  explicit NonFiniteSample(const std::string& m) : Error(m, kExitParse) {}
};
struct InvalidParams : Error {
  explicit InvalidParams(const std::string& m) : Error(m, kExitParse) {}
};
struct MismatchedData : Error {
  explicit MismatchedData(const std::string& m) : Error(m, kExitParse) {}
};

// Input that is syntactically fine but statistically unusable.
struct EmptyInput : Error {
  explicit EmptyInput(const std::string& m) : Error(m, kExitDegenerate) {}
};
struct TooFewSamples : Error {
  explicit TooFewSamples(const std::string& m) : Error(m, kExitDegenerate) {}
};
struct DegenerateInput : Error {
  explicit DegenerateInput(const std::string& m) : Error(m, kExitDegenerate) {}
};

// Numerical breakdown during estimation or inversion.
struct DegenerateDensity : Error {
  explicit DegenerateDensity(const std::string& m) : Error(m, kExitNumeric) {}
};
struct NoConvergence : Error {
  explicit NoConvergence(const std::string& m) : Error(m, kExitNumeric) {}
};

// Manifest-level problems (fatal in batch mode).
struct ManifestError : Error {
  explicit ManifestError(const std::string& m) : Error(m, kExitManifest) {}
};
struct DuplicateKey : Error {
  explicit DuplicateKey(const std::string& m) : Error(m, kExitManifest) {}
};

}  // namespace lgm
