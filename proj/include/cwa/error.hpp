#pragma once

#include <stdexcept>

namespace cwa {

// Rejected input: shape mismatches, empty datasets, malformed values.
struct InvalidInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (e.g. non-scalar loss, empty sets).
struct ContractViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration (thresholds, budgets, unknown fields).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training diverged; message names the epoch.
struct TrainingFailureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Metric has no defined value (e.g. ASR with zero clean mAP).
struct UndefinedMetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File I/O and format problems.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cwa
