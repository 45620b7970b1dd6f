#pragma once

#include <stdexcept>
#include <string>

namespace cmliv {

// Invalid configuration or usage: bad preset ids, out-of-range
// hyperparameters, incompatible options.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Dataset and file-format violations (non-finite values, schema errors).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Learner failures: degenerate training inputs, prediction on
// mismatched feature layouts.
class fit_error : public std::runtime_error {
 public:
  explicit fit_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested instrument cannot be formed, e.g. counterfactual propensity
// scores with a non-binary instrument column.
class unsupported_instrument_error : public config_error {
 public:
  explicit unsupported_instrument_error(const std::string& msg) : config_error(msg) {}
};

// The empirical moment denominator is too close to zero for the ratio
// estimator to be meaningful. Carries the offending denominator value.
class weak_identification_error : public std::runtime_error {
 public:
  weak_identification_error(const std::string& msg, double denominator)
      : std::runtime_error(msg), denominator_(denominator) {}
  double denominator() const { return denominator_; }

 private:
  double denominator_;
};

}  // namespace cmliv
