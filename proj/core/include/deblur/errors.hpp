#pragma once

#include <stdexcept>
#include <string>

namespace deblur {

// Operand shapes inconsistent or out of range (kernel larger than image,
// empty raster, crop target exceeding source, ...).
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numeric routine could not produce a finite/usable result (covariance
// factorization failed after jitter escalation, NaN detected, ...).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File-level problems: missing, unreadable, unwritable, malformed container.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model file damaged: bad magic, truncated blob, header not parseable.
struct CorruptModelError : IoError {
  using IoError::IoError;
};

// Model file from an unsupported format version; message names both versions.
struct ModelVersionError : IoError {
  using IoError::IoError;
};

// Model file parsed but violates structural invariants (non-odd kernel,
// non-increasing scale sizes, tensor shape mismatch, ...).
struct ModelInvariantError : IoError {
  using IoError::IoError;
};

// Bad configuration: unknown key, unparsable value, missing required field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace deblur
