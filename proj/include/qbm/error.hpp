#pragma once

#include <stdexcept>
#include <string>

namespace qbm {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/operation shape disagreements.
struct ShapeError : Error {
  using Error::Error;
};

// Bad configuration values (rates, widths, unknown variants/keys).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed input files; messages carry line numbers where known.
struct ParseError : Error {
  using Error::Error;
};

// Dataset construction problems (too small, sizing, field constraints).
struct DatasetError : Error {
  using Error::Error;
};

// All-masked or otherwise empty inputs where at least one valid element
// is required (empty pools, empty distributions, empty bags).
struct DegenerateInputError : Error {
  using Error::Error;
};

// An instance that cannot be scored (e.g. stopword-only bag under a
// bag-representation variant).
struct InvalidInstanceError : Error {
  using Error::Error;
};

// Checkpoint load/save failures: bad magic, truncation, checksum,
// incompatible version.
struct CheckpointError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required (loss blow-up).
struct NumericError : Error {
  using Error::Error;
};

// Operation requested on a model that lacks the component
// (e.g. coverage-weight inspection on a variant without coverage).
struct CapabilityError : Error {
  using Error::Error;
};

}  // namespace qbm
