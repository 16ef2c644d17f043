#pragma once

#include <stdexcept>
#include <string>

namespace dampwave {

/// Invalid input: bad parameters, mismatched domains, malformed files.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to deliver its postcondition
/// (non-convergence, step failure, corrupted data).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dampwave
