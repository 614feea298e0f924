#ifndef FLAPFOIL_ERRORS_HPP_
#define FLAPFOIL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace flapfoil {

// Base class for every error raised by the workbench.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Action outside the admissible amplitude / Strouhal box.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

// A tail-beat was asked to start from the centre line.
class DegenerateStart : public Error {
 public:
  using Error::Error;
};

// Non-finite kinematics, loads or losses.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Efficiency requested over an interval with non-positive expended work.
class DegeneratePower : public Error {
 public:
  using Error::Error;
};

// Environment step aborted (e.g. non-finite action).
class EnvironmentFault : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration or command line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable run records / checkpoints.
class RecordError : public Error {
 public:
  using Error::Error;
};

}  // namespace flapfoil

#endif  // FLAPFOIL_ERRORS_HPP_
