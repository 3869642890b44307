#pragma once

#include <stdexcept>
#include <string>

namespace nest {

// Error taxonomy mirrored by the CLI exit codes: usage errors exit 1,
// data/ingestion errors exit 2, numeric failures exit 3.

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension mismatches are a kind of usage error.
class ShapeError : public UsageError {
 public:
  using UsageError::UsageError;
};

}  // namespace nest
