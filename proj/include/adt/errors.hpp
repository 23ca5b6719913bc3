#pragma once

#include <stdexcept>
#include <string>

namespace adt {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument outside its documented domain (bad class index, empty batch, ...).
struct InvalidParameterError : Error {
  using Error::Error;
};

/// A vector claimed to be a probability distribution is not one.
struct InvalidDistributionError : Error {
  using Error::Error;
};

/// Operand shapes do not match.
struct DimensionError : Error {
  using Error::Error;
};

/// Non-finite value where a finite one is required (loss terms, gradients).
struct NumericalError : Error {
  using Error::Error;
};

/// Malformed input file (IDX, CSV, checkpoint).
struct FormatError : Error {
  using Error::Error;
};

/// Config problem; carries the offending key so the CLI can name it.
struct ConfigError : Error {
  ConfigError(std::string key, const std::string& what)
      : Error("config key '" + key + "': " + what), field(std::move(key)) {}
  std::string field;
};

/// Dataset generation could not satisfy its constraints.
struct GenerationError : Error {
  using Error::Error;
};

/// Requested split is infeasible for the dataset.
struct SplitError : Error {
  using Error::Error;
};

}  // namespace adt
