#pragma once

#include <stdexcept>
#include <string>

namespace cars {

// Malformed problem/run configuration or invalid argument combination.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluator could not be constructed or violated its contract.
class EvaluatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Run log could not be parsed or does not match the run geometry.
class LogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cars
