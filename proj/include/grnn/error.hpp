#pragma once

#include <stdexcept>
#include <string>

namespace grnn {

/// Malformed or inconsistent input data (files, graphs, panels).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Out-of-range hyperparameter or dimension.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller broke a shape or sequencing contract.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// NaN/Inf, or a training run that diverged.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace grnn
