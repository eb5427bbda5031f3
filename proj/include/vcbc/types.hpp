// Common aliases and the error hierarchy shared by every vcbc module.
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace vcbc {

using Index = Eigen::Index;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand sizes disagree with the model or with each other.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The model itself is broken at the evaluated point (singular inertia, ...).
class ModelDefect : public Error {
 public:
  using Error::Error;
};

/// A configuration value violates its schema or invariant. `key()` names the
/// offending entry, e.g. "controller.lambda_l".
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Requested feature lies outside what is implemented (e.g. state-dependent metrics).
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Integration stopped because a derivative or state became non-finite.
class SimulationAbort : public Error {
 public:
  SimulationAbort(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

inline void require_size(Index actual, Index expected, const char* what) {
  if (actual != expected) {
    throw DimensionError(std::string(what) + ": expected size " + std::to_string(expected) +
                         ", got " + std::to_string(actual));
  }
}

}  // namespace vcbc
