#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pumrom {

// Base class for all library failures so callers can catch pumrom::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-facing input: degenerate geometry, malformed configs, bad sizes.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class MeshNotConforming : public Error {
 public:
  using Error::Error;
};

// kappa(u) denominator within 1e-14 of zero; signals a state far outside the
// physical range rather than a recoverable condition.
class DenominatorUnderflow : public Error {
 public:
  using Error::Error;
};

class SingularJacobian : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, std::vector<double> residual_history)
      : Error(what), residual_history(std::move(residual_history)) {}
  std::vector<double> residual_history;
};

class IndefiniteGram : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

class TrainingFailure : public Error {
 public:
  using Error::Error;
};

class ZeroSnapshot : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pumrom
