#pragma once

#include <stdexcept>
#include <string>

namespace lassl {

// Thrown when matrix/vector shapes violate an operation's contract.
struct DimensionError : std::invalid_argument {
  explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A numeric precondition failed (degenerate row, non-unit input, ...).
struct NumericError : std::invalid_argument {
  explicit NumericError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Operation called in the wrong order (e.g. backward without a tape).
struct StateError : std::logic_error {
  explicit StateError(const std::string& msg) : std::logic_error(msg) {}
};

// Malformed, truncated or version-mismatched binary files.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad experiment configuration (unknown key, missing key, invalid value).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss during training; carries the epoch/batch where it occurred.
struct DivergenceError : std::runtime_error {
  int epoch;
  int batch;
  DivergenceError(const std::string& msg, int epoch_, int batch_)
      : std::runtime_error(msg), epoch(epoch_), batch(batch_) {}
};

}  // namespace lassl
