#pragma once

#include <stdexcept>
#include <string>

namespace sbattack {

/// Input violates a documented precondition or invariant (bad config,
/// malformed file, dimension mismatch). The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input could not be read or output could not be written. Exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sbattack
