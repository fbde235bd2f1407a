#pragma once

#include <stdexcept>
#include <string>

namespace oboost {

// Caller broke an API precondition: dimension mismatch, protocol misuse.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid configuration value (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or unusable input data (maps to CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN or Inf reached an operation that requires finite input.
class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace oboost
