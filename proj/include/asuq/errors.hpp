#pragma once

#include <stdexcept>
#include <string>

namespace asuq {

// Invalid user-facing configuration (bad sizes, unknown keys, k > n, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller broke an API precondition (length mismatch, inconsistent objects).
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// A numeric quantity became non-finite; message names the offending stage.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Optimization diverged; message carries epoch/batch.
struct TrainingError : std::runtime_error {
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint or report I/O failure; message names the file and field.
struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace asuq
