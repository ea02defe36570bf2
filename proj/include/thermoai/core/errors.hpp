#pragma once

#include <stdexcept>
#include <string>

namespace thermoai {

/// Violated precondition or dimension mismatch at an API boundary.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A trajectory left the finite range (|v_i| > 1e12 or NaN).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double time, const std::string& what)
      : std::runtime_error("integration diverged at t=" + std::to_string(time) + ": " + what),
        time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Experiment configuration does not validate; carries the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace thermoai
