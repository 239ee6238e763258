#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace aaa {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input. `field` is a JSON-pointer-like path to the offending value
// ("design.pT", "rawA[2]") so service callers can surface it per field.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& message, std::vector<double> residuals)
      : Error(message), residuals_(std::move(residuals)) {}

  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

class McmcError : public Error {
 public:
  using Error::Error;
};

// Event log is malformed or does not reproduce.
class CorruptLogError : public Error {
 public:
  using Error::Error;
};

}  // namespace aaa
