#pragma once

#include <stdexcept>
#include <string>

namespace qsmooth {

// Invalid argument values: bad ranges, mismatched lengths, broken invariants.
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Settings that are individually valid but cannot run together (loop
// instability, decimation bias, missing root bracket).
class ConfigurationError : public ParameterError {
public:
  using ParameterError::ParameterError;
};

// Not enough data for the requested statistic.
class StatisticsError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace qsmooth
